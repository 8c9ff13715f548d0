// Wire types mirroring the hub's canonical JSON encodings.

export type CategoryId =
    | "office_with_visitor"
    | "office"
    | "building"
    | "remote_active"
    | "remote_idle"
    | "online_only"
    | "out_of_office"
    | "unknown";

export interface PresenceState {
    category: CategoryId;
    overlays: string[];
    location_label: string | null;
}

export type StateMap = Record<string, PresenceState>;

export interface StatusMessage {
    user_id: string;
    text: string;
    posted_at: string;
}

export type FrameKind = "snapshot" | "state_delta" | "feed" | "heartbeat";

export interface StreamFrame {
    seq: number;
    kind: FrameKind;
    payload: unknown;
}

export interface SnapshotPayload {
    at: string;
    states: StateMap;
    feed: StatusMessage[];
}

export interface DeltaPayload {
    at: string;
    changes: { user_id: string; state: PresenceState }[];
}

export interface UserProfile {
    user_id: string;
    display_name: string;
    photo_ref: string;
    email: string;
    im_handles: Record<string, string>;
}

export interface BusinessCard {
    user_id: string;
    display_name: string;
    photo_ref: string;
    email: string;
    state: PresenceState;
    presence_sentence: string;
    status: StatusMessage | null;
    im_channels: { protocol: string; handle: string }[];
    location: string | null;
}

export interface OptInConfig {
    user_id: string;
    enabled: Record<string, boolean>;
    show_location: boolean;
}

export const AGGREGATOR_KINDS = [
    "office_vision",
    "device_presence",
    "computer_client",
    "calendar",
    "im_presence",
] as const;

export type AggregatorKind = (typeof AGGREGATOR_KINDS)[number];

export const AGGREGATOR_LABELS: Record<AggregatorKind, string> = {
    office_vision: "Office camera (motion only)",
    device_presence: "Bluetooth device proximity",
    computer_client: "Computer & network activity",
    calendar: "Calendar",
    im_presence: "IM presence",
};
