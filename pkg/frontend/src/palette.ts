// Fixed tile palette: hue names and the saturation axis come from the
// server's render semantics; the exact hex values are a design decision
// owned by this dashboard.

import type { CategoryId, PresenceState } from "./types.js";

export const PALETTE = {
    greenFull: "#1E7D1E",
    greenLight: "#8FD48F",
    blueFull: "#1E4F9E",
    blueLight: "#9FC2EA",
    purple: "#7D1E9E",
    amber: "#C9A24B",
    gray: "#C4C4C4",
} as const;

export interface TileStyle {
    color: string;
    intensity: "full" | "light";
    icons: string[];
}

const CATEGORY_COLORS: Record<CategoryId, { color: string; intensity: "full" | "light" }> = {
    office_with_visitor: { color: PALETTE.purple, intensity: "full" },
    office: { color: PALETTE.greenFull, intensity: "full" },
    building: { color: PALETTE.greenLight, intensity: "light" },
    remote_active: { color: PALETTE.blueFull, intensity: "full" },
    remote_idle: { color: PALETTE.blueLight, intensity: "light" },
    online_only: { color: PALETTE.blueLight, intensity: "light" },
    out_of_office: { color: PALETTE.amber, intensity: "full" },
    unknown: { color: PALETTE.gray, intensity: "light" },
};

export const SENTENCES: Record<CategoryId, string> = {
    office_with_visitor: "In the office with a visitor",
    office: "In the office",
    building: "In the building",
    remote_active: "Connected remotely, at the computer",
    remote_idle: "Connected remotely, away from the computer",
    online_only: "Signed in to IM only",
    out_of_office: "Out of office",
    unknown: "No recent information",
};

export function tileStyle(state: PresenceState): TileStyle {
    const { color, intensity } = CATEGORY_COLORS[state.category];
    const icons: string[] = [];
    if (state.category === "office_with_visitor") icons.push("silhouette");
    if (state.overlays.includes("calendar_icon")) icons.push("calendar");
    return { color, intensity, icons };
}
