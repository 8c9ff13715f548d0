// Dashboard wiring: one stream connection, pure renderers, REST writes.

import {
    buildOptInDoc,
    clearStatus,
    fetchCard,
    fetchPrefs,
    fetchRoster,
    postSessionEvent,
    postStatus,
    savePrefs,
    STATUS_MAX_CHARS,
} from "./api.js";
import { renderBanner, renderCard, renderFeed, renderGrid, renderPrefsPanel } from "./render.js";
import { StreamClient } from "./streamClient.js";
import type { StateMap, StatusMessage, UserProfile } from "./types.js";

const FEED_DISPLAY_LIMIT = 200;

function $(selector: string): HTMLElement {
    const el = document.querySelector(selector);
    if (!el) throw new Error(`missing element ${selector}`);
    return el as HTMLElement;
}

async function main() {
    const params = new URLSearchParams(location.search);
    const baseUrl =
        params.get("server") ?? `${location.protocol}//${location.hostname || "127.0.0.1"}:8765`;

    let roster: UserProfile[] = [];
    let states: StateMap = {};
    let feed: StatusMessage[] = [];
    let connected = false;

    roster = await fetchRoster(baseUrl);
    const userSelect = $("#user-select") as HTMLSelectElement;
    for (const user of roster) {
        const option = document.createElement("option");
        option.value = user.user_id;
        option.textContent = user.display_name;
        userSelect.appendChild(option);
    }
    const requested = params.get("user");
    if (requested && roster.some((u) => u.user_id === requested)) {
        userSelect.value = requested;
    }
    const me = () => userSelect.value;

    const rerender = () => {
        $("#banner").innerHTML = renderBanner(connected);
        $("#tiles").innerHTML = renderGrid(roster, states);
        $("#feed").innerHTML = renderFeed(feed.slice(-FEED_DISPLAY_LIMIT), roster, Date.now());
    };

    const client = new StreamClient(baseUrl, {
        onStates(next) {
            states = next;
            rerender();
        },
        onFeedReset(messages) {
            feed = [...messages];
            rerender();
        },
        onFeed(message) {
            feed.push(message);
            rerender();
        },
        onConnection(up) {
            connected = up;
            rerender();
        },
    });
    void client.start();

    // session instrumentation: open now, close on page hide (best effort)
    void postSessionEvent(baseUrl, me(), "open");
    window.addEventListener("pagehide", () => {
        void postSessionEvent(baseUrl, me(), "close");
    });

    // business card on tile click
    $("#tiles").addEventListener("click", async (event) => {
        const tile = (event.target as HTMLElement).closest(".tile") as HTMLElement | null;
        if (!tile) return;
        const card = await fetchCard(baseUrl, tile.dataset.user as string);
        $("#card-body").innerHTML = renderCard(card, Date.now());
        ($("#card-modal") as HTMLDialogElement).showModal();
    });
    $("#card-close").addEventListener("click", () => {
        ($("#card-modal") as HTMLDialogElement).close();
    });

    // status posting
    const statusInput = $("#status-input") as HTMLInputElement;
    statusInput.maxLength = STATUS_MAX_CHARS;
    $("#status-form").addEventListener("submit", async (event) => {
        event.preventDefault();
        const text = statusInput.value;
        if (text.length === 0 || text.length > STATUS_MAX_CHARS) return;
        await postStatus(baseUrl, me(), text);
        statusInput.value = "";
    });
    $("#status-clear").addEventListener("click", async () => {
        await clearStatus(baseUrl, me());
        statusInput.value = "";
    });

    // opt-in preferences panel: prefetch current values, save posts the full map
    $("#prefs-open").addEventListener("click", async () => {
        const optin = await fetchPrefs(baseUrl, me());
        $("#prefs-body").innerHTML = renderPrefsPanel(optin);
        ($("#prefs-modal") as HTMLDialogElement).showModal();
    });
    $("#prefs-cancel").addEventListener("click", () => {
        ($("#prefs-modal") as HTMLDialogElement).close(); // no request on cancel
    });
    $("#prefs-save").addEventListener("click", async () => {
        const toggles: Record<string, boolean> = {};
        document.querySelectorAll<HTMLInputElement>("#prefs-body input[type=checkbox]").forEach((box) => {
            toggles[box.name] = box.checked;
        });
        await savePrefs(baseUrl, buildOptInDoc(me(), toggles));
        ($("#prefs-modal") as HTMLDialogElement).close();
    });

    rerender();
}

main().catch((err) => {
    document.body.innerHTML = `<pre class="fatal">dashboard failed to start: ${String(err)}</pre>`;
});
