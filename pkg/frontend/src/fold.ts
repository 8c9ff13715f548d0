// Pure fold of stream frames into the local state map. The client never
// synthesizes a state it did not receive.

import type { DeltaPayload, SnapshotPayload, StateMap, StreamFrame } from "./types.js";

export function foldFrame(states: StateMap, frame: StreamFrame): StateMap {
    if (frame.kind === "snapshot") {
        return { ...(frame.payload as SnapshotPayload).states };
    }
    if (frame.kind === "state_delta") {
        const next = { ...states };
        for (const change of (frame.payload as DeltaPayload).changes) {
            next[change.user_id] = change.state;
        }
        return next;
    }
    return states;
}
