import type { ExplainResponse, PredictionResponse } from "../src/api.js";

export function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

// Probabilities deliberately keyed out of canonical order: the UI must
// impose the order itself instead of trusting JSON key order.
export function predictionBody(): PredictionResponse {
  return {
    top_class: "AMD",
    confidence: 0.97,
    probabilities: {
      NORMAL: 0.001,
      DRUSEN: 0.002,
      AMD: 0.97,
      CSR: 0.003,
      MH: 0.004,
      CNV: 0.005,
      DR: 0.006,
      DME: 0.009,
    },
    model_name: "stub-model",
    latency_ms: 2.5,
  };
}

export function explainBody(
  method: string,
  params: Record<string, unknown> = {},
): ExplainResponse {
  return {
    method,
    overlay_image: "aGVhdG1hcA==",
    raw_map: [[0, 1], [1, 0]],
    params,
    target_class: "AMD",
    class_probability: 0.97,
  };
}

export interface RecordedCall {
  url: string;
  init: RequestInit | undefined;
}

export type Responder = (url: string, init?: RequestInit) => Response | Promise<Response>;

export function recordingFetch(respond: Responder): {
  fetchFn: typeof fetch;
  calls: RecordedCall[];
} {
  const calls: RecordedCall[] = [];
  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    calls.push({ url, init });
    return respond(url, init);
  }) as typeof fetch;
  return { fetchFn, calls };
}

export function methodOf(url: string): string | null {
  return new URL(url, "http://localhost").searchParams.get("method");
}

export function explainCalls(calls: RecordedCall[], method?: string): RecordedCall[] {
  return calls.filter((call) => {
    if (!call.url.includes("/api/explain")) return false;
    return method === undefined || methodOf(call.url) === method;
  });
}
