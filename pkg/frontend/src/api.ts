// REST calls to the hub. Every write sends a complete document; the prefs
// builder in particular can only produce total opt-in maps.

import type { BusinessCard, OptInConfig, UserProfile } from "./types.js";
import { AGGREGATOR_KINDS } from "./types.js";

export const STATUS_MAX_CHARS = 280;

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message);
    }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(url, init);
    if (!resp.ok) {
        let detail = `HTTP ${resp.status}`;
        try {
            const body = (await resp.json()) as { message?: string };
            if (body.message) detail = body.message;
        } catch {
            // keep the bare status
        }
        throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
}

function post<T>(url: string, doc: unknown): Promise<T> {
    return request<T>(url, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(doc),
    });
}

export function fetchRoster(baseUrl: string): Promise<UserProfile[]> {
    return request(`${baseUrl}/users`);
}

export function fetchCard(baseUrl: string, userId: string): Promise<BusinessCard> {
    return request(`${baseUrl}/card/${encodeURIComponent(userId)}`);
}

export function fetchPrefs(baseUrl: string, userId: string): Promise<OptInConfig> {
    return request(`${baseUrl}/prefs/${encodeURIComponent(userId)}`);
}

export function postStatus(baseUrl: string, userId: string, text: string) {
    if (text.length > STATUS_MAX_CHARS) {
        throw new ApiError(400, `status text exceeds ${STATUS_MAX_CHARS} characters`);
    }
    return post(`${baseUrl}/status`, { user_id: userId, text });
}

export function clearStatus(baseUrl: string, userId: string) {
    return postStatus(baseUrl, userId, "");
}

export function buildOptInDoc(
    userId: string,
    toggles: Record<string, boolean>,
): OptInConfig {
    const enabled: Record<string, boolean> = {};
    for (const kind of AGGREGATOR_KINDS) {
        if (!(kind in toggles)) {
            throw new Error(`opt-in map missing aggregator kind ${kind}`);
        }
        enabled[kind] = !!toggles[kind];
    }
    return { user_id: userId, enabled, show_location: !!toggles.show_location };
}

export function savePrefs(baseUrl: string, optin: OptInConfig) {
    return post(`${baseUrl}/prefs`, optin);
}

export function postSessionEvent(baseUrl: string, userId: string, kind: "open" | "close") {
    // best-effort: page may be unloading
    return fetch(`${baseUrl}/session`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ user_id: userId, kind }),
        keepalive: true,
    }).catch(() => undefined);
}
