import { describe, expect, it } from "vitest";

import { PALETTE, SENTENCES, tileStyle } from "../src/palette.js";
import { renderBanner, renderCard, renderFeed, renderGrid, renderPrefsPanel, renderTile } from "../src/render.js";
import type { BusinessCard, CategoryId, PresenceState, UserProfile } from "../src/types.js";

const state = (category: CategoryId, overlays: string[] = [], location: string | null = null): PresenceState => ({
    category,
    overlays,
    location_label: location,
});

const alice: UserProfile = {
    user_id: "alice",
    display_name: "Alice",
    photo_ref: "",
    email: "alice@example.test",
    im_handles: { skype: "alice.s" },
};

describe("palette mapping", () => {
    // every category maps to its exact palette entry and icon set
    const expected: Record<CategoryId, { color: string; intensity: string; icons: string[] }> = {
        office: { color: PALETTE.greenFull, intensity: "full", icons: [] },
        building: { color: PALETTE.greenLight, intensity: "light", icons: [] },
        remote_active: { color: PALETTE.blueFull, intensity: "full", icons: [] },
        remote_idle: { color: PALETTE.blueLight, intensity: "light", icons: [] },
        online_only: { color: PALETTE.blueLight, intensity: "light", icons: [] },
        out_of_office: { color: PALETTE.amber, intensity: "full", icons: [] },
        unknown: { color: PALETTE.gray, intensity: "light", icons: [] },
        office_with_visitor: { color: PALETTE.purple, intensity: "full", icons: ["silhouette"] },
    };

    for (const [category, want] of Object.entries(expected)) {
        it(`maps ${category}`, () => {
            const overlays = category === "office_with_visitor" ? ["visitor_icon"] : [];
            expect(tileStyle(state(category as CategoryId, overlays))).toEqual(want);
        });
    }

    it("adds the calendar icon from the overlay", () => {
        expect(tileStyle(state("office", ["calendar_icon"])).icons).toEqual(["calendar"]);
        expect(tileStyle(state("office_with_visitor", ["visitor_icon", "calendar_icon"])).icons)
            .toEqual(["silhouette", "calendar"]);
    });

    it("exact hex values", () => {
        expect(PALETTE).toEqual({
            greenFull: "#1E7D1E",
            greenLight: "#8FD48F",
            blueFull: "#1E4F9E",
            blueLight: "#9FC2EA",
            purple: "#7D1E9E",
            amber: "#C9A24B",
            gray: "#C4C4C4",
        });
    });
});

describe("tile rendering", () => {
    it("office tile carries the dark green border", () => {
        const html = renderTile(alice, state("office"));
        expect(html).toContain(`border-color:${PALETTE.greenFull}`);
        expect(html).toContain('data-user="alice"');
        expect(html).toContain("Alice");
    });

    it("visitor tile is purple with the silhouette icon", () => {
        const html = renderTile(alice, state("office_with_visitor", ["visitor_icon"]));
        expect(html).toContain(`border-color:${PALETTE.purple}`);
        expect(html).toContain("icon-silhouette");
    });

    it("unknown tile is light gray", () => {
        const html = renderTile(alice, state("unknown"));
        expect(html).toContain(`border-color:${PALETTE.gray}`);
        expect(html).toContain("intensity-light");
    });

    it("tooltip carries the presence sentence", () => {
        const html = renderTile(alice, state("remote_idle"));
        expect(html).toContain(SENTENCES.remote_idle);
    });

    it("escapes user-controlled text", () => {
        const sly: UserProfile = { ...alice, display_name: "<img onerror=x>" };
        expect(renderTile(sly, state("unknown"))).not.toContain("<img onerror");
    });

    it("renders one tile per roster user, unknown when absent from the map", () => {
        const bob: UserProfile = { ...alice, user_id: "bob", display_name: "Bob" };
        const html = renderGrid([alice, bob], { alice: state("office") });
        expect(html.match(/class="tile/g)).toHaveLength(2);
        expect(html).toContain(`border-color:${PALETTE.gray}`);
    });
});

describe("business card", () => {
    const card: BusinessCard = {
        user_id: "alice",
        display_name: "Alice",
        photo_ref: "",
        email: "alice@example.test",
        state: state("building", [], "East Wing"),
        presence_sentence: "In the building",
        status: { user_id: "alice", text: "writing", posted_at: "2026-03-02T09:00:00.000Z" },
        im_channels: [{ protocol: "skype", handle: "alice.s" }],
        location: "East Wing",
    };
    const noon = Date.parse("2026-03-02T12:00:00.000Z");

    it("shows location only when the server sent one", () => {
        expect(renderCard(card, noon)).toContain("East Wing");
        expect(renderCard({ ...card, location: null }, noon)).not.toContain("Last seen near");
    });

    it("email renders as a mailto link", () => {
        expect(renderCard(card, noon)).toContain('href="mailto:alice@example.test"');
    });

    it("im links only for activated channels", () => {
        expect(renderCard(card, noon)).toContain('href="skype:alice.s?chat"');
        const none = renderCard({ ...card, im_channels: [] }, noon);
        expect(none).not.toContain("skype:");
    });

    it("status shows relative time, amber when stale beyond 24h", () => {
        expect(renderCard(card, noon)).toContain("3 h ago");
        expect(renderCard(card, noon)).not.toContain("stale");
        const muchLater = Date.parse("2026-03-04T12:00:00.000Z");
        expect(renderCard(card, muchLater)).toContain("stale");
    });
});

describe("feed and chrome", () => {
    it("renders newest first with cleared markers", () => {
        const now = Date.parse("2026-03-02T10:00:00.000Z");
        const html = renderFeed(
            [
                { user_id: "alice", text: "first", posted_at: "2026-03-02T09:00:00.000Z" },
                { user_id: "alice", text: "", posted_at: "2026-03-02T09:30:00.000Z" },
            ],
            [alice],
            now,
        );
        expect(html.indexOf("(cleared)")).toBeLessThan(html.indexOf("first"));
        expect(html).toContain("1 h ago");
    });

    it("prefs panel renders all five aggregator toggles plus location", () => {
        const html = renderPrefsPanel({
            user_id: "alice",
            enabled: {
                office_vision: true,
                device_presence: false,
                computer_client: true,
                calendar: false,
                im_presence: true,
            },
            show_location: true,
        });
        expect(html.match(/type="checkbox"/g)).toHaveLength(6);
        expect(html).toContain('name="office_vision" checked');
        expect(html).toContain('name="device_presence">');
        expect(html).toContain('name="show_location" checked');
    });

    it("banner only when disconnected", () => {
        expect(renderBanner(true)).toBe("");
        expect(renderBanner(false)).toContain("Disconnected");
    });
});
