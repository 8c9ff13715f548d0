// Live subscription to the hub's NDJSON stream.
//
// Folds Snapshot + StateDelta frames into local state, detects sequence gaps
// (forcing a resubscribe), and reconnects with exponential backoff. A
// disconnect is surfaced through onConnection(false) so the UI shows a
// banner instead of silently going stale.

import { foldFrame } from "./fold.js";
import type { SnapshotPayload, StateMap, StatusMessage, StreamFrame } from "./types.js";

export class SeqGapError extends Error {}

export interface StreamHandlers {
    onStates(states: StateMap): void;
    onFeedReset(messages: StatusMessage[]): void;
    onFeed(message: StatusMessage): void;
    onConnection(connected: boolean): void;
}

export interface StreamOptions {
    fetchFn?: typeof fetch;
    sleep?: (ms: number) => Promise<void>;
    backoffBaseMs?: number;
    backoffMaxMs?: number;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class StreamClient {
    private running = false;
    private abort: AbortController | null = null;
    private backoffMs: number;

    constructor(
        private readonly baseUrl: string,
        private readonly handlers: StreamHandlers,
        private readonly options: StreamOptions = {},
    ) {
        this.backoffMs = options.backoffBaseMs ?? 1000;
    }

    start(): Promise<void> {
        this.running = true;
        return this.runLoop();
    }

    stop(): void {
        this.running = false;
        this.abort?.abort();
    }

    private async runLoop(): Promise<void> {
        const sleep = this.options.sleep ?? defaultSleep;
        const base = this.options.backoffBaseMs ?? 1000;
        const max = this.options.backoffMaxMs ?? 30000;
        this.backoffMs = base;
        while (this.running) {
            try {
                await this.consumeOnce();
            } catch {
                // fall through to reconnect
            }
            if (!this.running) break;
            this.handlers.onConnection(false);
            await sleep(this.backoffMs);
            this.backoffMs = Math.min(this.backoffMs * 2, max);
        }
    }

    private async consumeOnce(): Promise<void> {
        const fetchFn = this.options.fetchFn ?? fetch;
        this.abort = new AbortController();
        const resp = await fetchFn(`${this.baseUrl}/stream`, { signal: this.abort.signal });
        if (!resp.ok || !resp.body) {
            throw new Error(`stream returned HTTP ${resp.status}`);
        }
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        let expectedSeq = 1;
        let states: StateMap = {};
        let sawSnapshot = false;

        for (;;) {
            const { done, value } = await reader.read();
            if (done) {
                throw new Error("stream closed by server");
            }
            buffer += decoder.decode(value, { stream: true });
            let newline;
            while ((newline = buffer.indexOf("\n")) >= 0) {
                const line = buffer.slice(0, newline).trim();
                buffer = buffer.slice(newline + 1);
                if (!line) continue;
                const frame = JSON.parse(line) as StreamFrame;
                if (frame.seq !== expectedSeq) {
                    throw new SeqGapError(`expected seq ${expectedSeq}, got ${frame.seq}`);
                }
                expectedSeq += 1;
                if (frame.kind === "snapshot") {
                    sawSnapshot = true;
                    this.backoffMs = this.options.backoffBaseMs ?? 1000;
                    states = foldFrame(states, frame);
                    this.handlers.onConnection(true);
                    this.handlers.onFeedReset((frame.payload as SnapshotPayload).feed);
                    this.handlers.onStates(states);
                } else if (frame.kind === "state_delta") {
                    if (!sawSnapshot) {
                        throw new SeqGapError("state delta before snapshot");
                    }
                    states = foldFrame(states, frame);
                    this.handlers.onStates(states);
                } else if (frame.kind === "feed") {
                    this.handlers.onFeed(frame.payload as StatusMessage);
                }
                // heartbeats only advance seq
            }
        }
    }
}
