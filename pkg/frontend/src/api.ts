// Typed client for the classifier HTTP service. All requests are multipart
// uploads; errors come back as JSON {error_code, message} which we surface
// as ApiError so the UI can show the server's own words.

export const CLASS_ORDER = [
  "AMD",
  "CNV",
  "CSR",
  "DME",
  "DR",
  "DRUSEN",
  "MH",
  "NORMAL",
] as const;

export type ClassName = (typeof CLASS_ORDER)[number];

export type ExplainMethod = "gradcam" | "lime" | "occlusion";

export const EXPLAIN_METHODS: readonly ExplainMethod[] = [
  "gradcam",
  "lime",
  "occlusion",
];

export const METHOD_LABELS: Record<ExplainMethod, string> = {
  gradcam: "Grad-CAM",
  lime: "LIME",
  occlusion: "Occlusion",
};

export interface PredictionResponse {
  top_class: string;
  confidence: number;
  probabilities: Record<string, number>;
  model_name: string;
  latency_ms: number;
}

export interface ExplainResponse {
  method: string;
  overlay_image: string;
  raw_map: number[][];
  params: Record<string, unknown>;
  target_class: string;
  class_probability: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorCode: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorFrom(resp: Response): Promise<ApiError> {
  let code = "HttpError";
  let message = `request failed with status ${resp.status}`;
  try {
    const body: unknown = await resp.json();
    if (body && typeof body === "object") {
      const record = body as Record<string, unknown>;
      if (typeof record.error_code === "string") code = record.error_code;
      if (typeof record.message === "string") message = record.message;
    }
  } catch {
    // non-JSON error body keeps the generic message
  }
  return new ApiError(resp.status, code, message);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  async predict(file: Blob): Promise<PredictionResponse> {
    const form = new FormData();
    form.append("file", file, "upload.png");
    const resp = await this.fetchFn(`${this.baseUrl}/api/predict`, {
      method: "POST",
      body: form,
    });
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as PredictionResponse;
  }

  async explain(
    file: Blob,
    method: ExplainMethod,
    params?: Record<string, unknown>,
    targetClass?: string,
  ): Promise<ExplainResponse> {
    const query = new URLSearchParams({ method });
    if (targetClass !== undefined) query.set("target_class", targetClass);
    const form = new FormData();
    form.append("file", file, "upload.png");
    if (params && Object.keys(params).length > 0) {
      form.append("params", JSON.stringify(params));
    }
    const resp = await this.fetchFn(`${this.baseUrl}/api/explain?${query}`, {
      method: "POST",
      body: form,
    });
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as ExplainResponse;
  }
}
