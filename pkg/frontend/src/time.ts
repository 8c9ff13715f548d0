// Relative timestamps for the feed and business card; absolute time on hover.

export function relativeTime(iso: string, nowMs: number): string {
    const seconds = Math.max(0, Math.floor((nowMs - Date.parse(iso)) / 1000));
    if (seconds < 60) return "just now";
    if (seconds < 3600) return `${Math.floor(seconds / 60)} min ago`;
    if (seconds < 86400) return `${Math.floor(seconds / 3600)} h ago`;
    return `${Math.floor(seconds / 86400)} d ago`;
}

export function isStale(iso: string, nowMs: number, thresholdHours = 24): boolean {
    return nowMs - Date.parse(iso) > thresholdHours * 3600 * 1000;
}
