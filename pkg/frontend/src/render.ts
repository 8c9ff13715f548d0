// Pure HTML renderers: every view is a function of the folded state, so the
// whole surface is snapshot-testable without a browser.

import { SENTENCES, tileStyle } from "./palette.js";
import { isStale, relativeTime } from "./time.js";
import type {
    BusinessCard,
    OptInConfig,
    PresenceState,
    StateMap,
    StatusMessage,
    UserProfile,
} from "./types.js";
import { AGGREGATOR_KINDS, AGGREGATOR_LABELS } from "./types.js";

export function escapeHtml(text: string): string {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;")
        .replace(/'/g, "&#39;");
}

const ICON_GLYPHS: Record<string, string> = {
    silhouette: "&#128100;", // bust in silhouette
    calendar: "&#128197;", // calendar pad
};

export function renderTile(user: UserProfile, state: PresenceState): string {
    const style = tileStyle(state);
    const icons = style.icons
        .map((icon) => `<span class="icon icon-${icon}" title="${icon}">${ICON_GLYPHS[icon]}</span>`)
        .join("");
    const initial = escapeHtml((user.display_name || user.user_id).slice(0, 1).toUpperCase());
    const photo = user.photo_ref
        ? `<img class="photo" src="${escapeHtml(user.photo_ref)}" alt="">`
        : `<div class="photo placeholder">${initial}</div>`;
    const tooltip = escapeHtml(SENTENCES[state.category]);
    return (
        `<div class="tile intensity-${style.intensity}" data-user="${escapeHtml(user.user_id)}"` +
        ` style="border-color:${style.color}" title="${tooltip}">` +
        `<div class="icons">${icons}</div>` +
        photo +
        `<div class="name">${escapeHtml(user.display_name)}</div>` +
        `</div>`
    );
}

export function renderGrid(roster: UserProfile[], states: StateMap): string {
    const unknown: PresenceState = { category: "unknown", overlays: [], location_label: null };
    return roster.map((user) => renderTile(user, states[user.user_id] ?? unknown)).join("");
}

export function renderFeed(messages: StatusMessage[], roster: UserProfile[], nowMs: number): string {
    const names = new Map(roster.map((u) => [u.user_id, u.display_name]));
    // newest first
    return [...messages]
        .reverse()
        .map((msg) => {
            const name = escapeHtml(names.get(msg.user_id) ?? msg.user_id);
            const body = msg.text
                ? `<span class="text">${escapeHtml(msg.text)}</span>`
                : `<span class="text cleared">(cleared)</span>`;
            const when = `<time title="${escapeHtml(msg.posted_at)}">${relativeTime(msg.posted_at, nowMs)}</time>`;
            return `<li class="feed-item"><b>${name}</b> ${body} ${when}</li>`;
        })
        .join("");
}

const IM_LINKS: Record<string, (handle: string) => string> = {
    skype: (h) => `skype:${encodeURIComponent(h)}?chat`,
    jabber: (h) => `xmpp:${encodeURIComponent(h)}`,
    google_talk: (h) => `xmpp:${encodeURIComponent(h)}`,
    windows_live_messenger: (h) => `msnim:chat?contact=${encodeURIComponent(h)}`,
};

export function renderCard(card: BusinessCard, nowMs: number): string {
    const style = tileStyle(card.state);
    const lines: string[] = [];
    lines.push(`<h2>${escapeHtml(card.display_name)}</h2>`);
    lines.push(
        `<p class="sentence"><span class="swatch" style="background:${style.color}"></span>` +
            `${escapeHtml(card.presence_sentence)}</p>`,
    );
    if (card.location) {
        lines.push(`<p class="location">Last seen near: ${escapeHtml(card.location)}</p>`);
    }
    if (card.status && card.status.text) {
        const staleClass = isStale(card.status.posted_at, nowMs) ? " stale" : "";
        lines.push(
            `<p class="status${staleClass}">&ldquo;${escapeHtml(card.status.text)}&rdquo; ` +
                `<time title="${escapeHtml(card.status.posted_at)}">` +
                `${relativeTime(card.status.posted_at, nowMs)}</time></p>`,
        );
    }
    if (card.email) {
        lines.push(
            `<p class="channel"><a href="mailto:${escapeHtml(card.email)}">${escapeHtml(card.email)}</a></p>`,
        );
    }
    for (const channel of card.im_channels) {
        const link = IM_LINKS[channel.protocol];
        if (!link) continue;
        lines.push(
            `<p class="channel im"><a href="${escapeHtml(link(channel.handle))}">` +
                `${escapeHtml(channel.protocol)}: ${escapeHtml(channel.handle)}</a></p>`,
        );
    }
    return `<div class="card" data-user="${escapeHtml(card.user_id)}">${lines.join("")}</div>`;
}

export function renderPrefsPanel(optin: OptInConfig): string {
    const toggles = AGGREGATOR_KINDS.map((kind) => {
        const checked = optin.enabled[kind] ? " checked" : "";
        return (
            `<label class="toggle"><input type="checkbox" name="${kind}"${checked}>` +
            `${escapeHtml(AGGREGATOR_LABELS[kind])}</label>`
        );
    });
    const location = optin.show_location ? " checked" : "";
    toggles.push(
        `<label class="toggle"><input type="checkbox" name="show_location"${location}>` +
            `Show my approximate location</label>`,
    );
    return toggles.join("");
}

export function renderBanner(connected: boolean): string {
    return connected
        ? ""
        : `<div class="banner disconnected">Disconnected from the presence server &mdash; retrying&hellip;</div>`;
}
