// Live tests against the real hub server (spawned as a subprocess).

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { buildOptInDoc, fetchCard, fetchRoster, savePrefs } from "../src/api.js";
import { StreamClient } from "../src/streamClient.js";
import type { StateMap } from "../src/types.js";

const REPO_ROOT = path.resolve(path.dirname(fileURLToPath(import.meta.url)), "..", "..");
const T0 = "2026-03-02T09:00:00.000Z";

let proc: ChildProcess | undefined;
let baseUrl = "";

function freePort(): Promise<number> {
    return new Promise((resolve, reject) => {
        const srv = createServer();
        srv.listen(0, "127.0.0.1", () => {
            const address = srv.address();
            if (address && typeof address === "object") {
                const port = address.port;
                srv.close(() => resolve(port));
            } else {
                reject(new Error("no address"));
            }
        });
    });
}

async function waitFor<T>(probe: () => Promise<T | undefined>, what: string, timeoutMs = 15000): Promise<T> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
        try {
            const got = await probe();
            if (got !== undefined) return got;
        } catch {
            // not up yet
        }
        await new Promise((r) => setTimeout(r, 50));
    }
    throw new Error(`timed out waiting for ${what}`);
}

function evidence(userId: string, kind: string, observedAt: string, payload: unknown) {
    return {
        user_id: userId,
        kind,
        source_id: "itest",
        observed_at: observedAt,
        payload,
    };
}

async function postEvidence(doc: unknown): Promise<Response> {
    return fetch(`${baseUrl}/evidence`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(doc),
    });
}

beforeAll(async () => {
    const dir = mkdtempSync(path.join(tmpdir(), "presence-hub-itest-"));
    const port = await freePort();
    const allOn = Object.fromEntries(
        ["office_vision", "device_presence", "computer_client", "calendar", "im_presence"].map((k) => [k, true]),
    );
    const config = {
        listen: { host: "127.0.0.1", port },
        log_file: path.join(dir, "events.ndjson"),
        internal_cidrs: ["10.0.0.0/16"],
        vpn_cidrs: ["172.16.0.0/12"],
        clock: { mode: "virtual", start: T0 },
        sweep_interval_s: 1.0,
        users: [
            { user_id: "alice", display_name: "Alice", email: "alice@example.test", im_handles: { skype: "alice.s" } },
            { user_id: "bob", display_name: "Bob", email: "bob@example.test", im_handles: {} },
        ],
        opt_ins: [
            { user_id: "alice", enabled: allOn, show_location: true },
            { user_id: "bob", enabled: allOn, show_location: false },
        ],
    };
    const configPath = path.join(dir, "config.json");
    writeFileSync(configPath, JSON.stringify(config));
    proc = spawn("python3", ["-m", "presence_hub", "serve", configPath], {
        cwd: dir,
        env: { ...process.env, PYTHONPATH: path.join(REPO_ROOT, "src") },
        stdio: ["ignore", "pipe", "pipe"],
    });
    baseUrl = `http://127.0.0.1:${port}`;
    await waitFor(async () => {
        const resp = await fetch(`${baseUrl}/users`);
        return resp.ok ? true : undefined;
    }, "hub server startup");
}, 30000);

afterAll(() => {
    proc?.kill();
});

describe("dashboard against the live hub", () => {
    it("stream client folds to the same state the server reports", async () => {
        let states: StateMap = {};
        const client = new StreamClient(baseUrl, {
            onStates: (next) => {
                states = next;
            },
            onFeedReset: () => undefined,
            onFeed: () => undefined,
            onConnection: () => undefined,
        });
        void client.start();
        try {
            await waitFor(async () => (states.alice ? true : undefined), "initial snapshot");

            const resp = await postEvidence(
                evidence("alice", "device_presence", T0, {
                    device_id: "phone",
                    ap_id: "bt-02",
                    ap_label: "Atrium",
                }),
            );
            expect(resp.status).toBe(200);
            await waitFor(
                async () => (states.alice?.category === "building" ? true : undefined),
                "building delta",
            );
            expect(states.alice.location_label).toBe("Atrium");

            const serverStates = (await (await fetch(`${baseUrl}/state`)).json()) as StateMap;
            expect(states).toEqual(serverStates);
        } finally {
            client.stop();
        }
    });

    it("roster and card honor the activation rules", async () => {
        const roster = await fetchRoster(baseUrl);
        expect(roster.map((u) => u.user_id)).toEqual(["alice", "bob"]);
        const alice = await fetchCard(baseUrl, "alice");
        expect(alice.im_channels).toEqual([{ protocol: "skype", handle: "alice.s" }]);
        const bob = await fetchCard(baseUrl, "bob");
        expect(bob.im_channels).toEqual([]); // nothing activated, no links
    });

    it("disabling the camera in prefs generalizes the live tile within a sweep", async () => {
        let states: StateMap = {};
        const client = new StreamClient(baseUrl, {
            onStates: (next) => {
                states = next;
            },
            onFeedReset: () => undefined,
            onFeed: () => undefined,
            onConnection: () => undefined,
        });
        void client.start();
        try {
            // motion + sighting: the tile reads Office
            const later = "2026-03-02T09:00:05.000Z";
            await postEvidence(
                evidence("alice", "office_vision", later, {
                    occupant_motion: true,
                    visitor_motion: false,
                }),
            );
            await postEvidence(
                evidence("alice", "device_presence", later, {
                    device_id: "phone",
                    ap_id: "bt-02",
                    ap_label: "Atrium",
                }),
            );
            await waitFor(
                async () => (states.alice?.category === "office" ? true : undefined),
                "office state",
            );

            // toggle the camera off, exactly as the prefs panel's save does
            const doc = buildOptInDoc("alice", {
                office_vision: false,
                device_presence: true,
                computer_client: true,
                calendar: true,
                im_presence: true,
                show_location: true,
            });
            await savePrefs(baseUrl, doc);

            const start = Date.now();
            await waitFor(
                async () => (states.alice?.category === "building" ? true : undefined),
                "generalized tile",
                10000,
            );
            expect(Date.now() - start).toBeLessThanOrEqual(10000);

            // matches the server's own ablation result
            const serverStates = (await (await fetch(`${baseUrl}/state`)).json()) as StateMap;
            expect(states.alice).toEqual(serverStates.alice);
            expect(serverStates.alice.category).toBe("building");
        } finally {
            client.stop();
        }
    });
});
