// The API base URL is configurable without rebuilding: set
// window.OCTCLASS_API_BASE before the module loads (index.html does this).
// Empty string means same-origin requests.
export function apiBaseUrl(): string {
  const globals = globalThis as { OCTCLASS_API_BASE?: unknown };
  if (typeof globals.OCTCLASS_API_BASE === "string") {
    return globals.OCTCLASS_API_BASE.replace(/\/+$/, "");
  }
  return "";
}
