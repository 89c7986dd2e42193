import {
  ApiClient,
  ApiError,
  CLASS_ORDER,
  EXPLAIN_METHODS,
  METHOD_LABELS,
  type ExplainMethod,
  type ExplainResponse,
  type PredictionResponse,
} from "./api.js";
import { ExplainCache } from "./cache.js";

type Status = "idle" | "uploading" | "predicted" | "explaining" | "error";

export interface AppHandle {
  root: HTMLElement;
  status(): Status;
  whenIdle(): Promise<void>;
}

const TEMPLATE = `
<div class="banner" data-testid="error-banner" hidden>
  <span data-testid="error-message"></span>
  <button type="button" data-testid="retry-button" hidden>Retry</button>
  <button type="button" data-testid="dismiss-button" aria-label="dismiss error">&times;</button>
</div>
<div class="layout">
  <section class="upload-panel">
    <h1>Retinal OCT Classifier</h1>
    <p class="hint">Upload a retinal OCT scan to classify it into one of eight disease categories.</p>
    <label class="file-label">
      Choose scan
      <input type="file" accept="image/png,image/jpeg,image/bmp" data-testid="file-input">
    </label>
    <img class="preview" data-testid="preview" alt="uploaded scan preview" hidden>
    <p class="status-line" data-testid="status-line">No scan loaded.</p>
  </section>
  <section class="results-panel">
    <div class="prediction-card" data-testid="prediction-card" hidden>
      <div class="headline" data-testid="prediction-headline"></div>
      <div class="model-line" data-testid="model-line"></div>
      <div class="bars" data-testid="probability-bars"></div>
    </div>
    <nav class="tabs" data-testid="method-tabs">
      <button type="button" data-method="gradcam" disabled>Grad-CAM</button>
      <button type="button" data-method="lime" disabled>LIME</button>
      <button type="button" data-method="occlusion" disabled>Occlusion</button>
      <button type="button" data-method="compare" disabled>Compare</button>
    </nav>
    <div class="occlusion-params">
      <label>patch <input type="number" min="1" value="32" data-testid="patch-input"></label>
      <label>stride <input type="number" min="1" value="16" data-testid="stride-input"></label>
    </div>
    <label class="opacity-control">
      overlay opacity
      <input type="range" min="0" max="1" step="0.05" value="1" data-testid="opacity-slider">
    </label>
    <div class="explain-view" data-testid="explain-view"></div>
  </section>
</div>
`;

export function buildApp(root: HTMLElement, client: ApiClient): AppHandle {
  root.innerHTML = TEMPLATE;

  const query = <T extends HTMLElement>(selector: string): T => {
    const node = root.querySelector<T>(selector);
    if (!node) throw new Error(`missing element: ${selector}`);
    return node;
  };

  const banner = query<HTMLDivElement>('[data-testid="error-banner"]');
  const errorMessage = query<HTMLSpanElement>('[data-testid="error-message"]');
  const retryButton = query<HTMLButtonElement>('[data-testid="retry-button"]');
  const dismissButton = query<HTMLButtonElement>('[data-testid="dismiss-button"]');
  const fileInput = query<HTMLInputElement>('[data-testid="file-input"]');
  const preview = query<HTMLImageElement>('[data-testid="preview"]');
  const statusLine = query<HTMLParagraphElement>('[data-testid="status-line"]');
  const card = query<HTMLDivElement>('[data-testid="prediction-card"]');
  const headline = query<HTMLDivElement>('[data-testid="prediction-headline"]');
  const modelLine = query<HTMLDivElement>('[data-testid="model-line"]');
  const barsBox = query<HTMLDivElement>('[data-testid="probability-bars"]');
  const patchInput = query<HTMLInputElement>('[data-testid="patch-input"]');
  const strideInput = query<HTMLInputElement>('[data-testid="stride-input"]');
  const opacitySlider = query<HTMLInputElement>('[data-testid="opacity-slider"]');
  const explainView = query<HTMLDivElement>('[data-testid="explain-view"]');
  const tabButtons = Array.from(
    root.querySelectorAll<HTMLButtonElement>("[data-method]"),
  );

  let status: Status = "idle";
  let file: File | null = null;
  let previewUrl = "";
  let prediction: PredictionResponse | null = null;
  let overlayOpacity = 1;
  let retryAction: (() => void) | null = null;
  const cache = new ExplainCache();

  // whenIdle resolves once every tracked async action has settled; tests
  // use it to wait out upload and explain round trips.
  let pendingCount = 0;
  let idleWaiters: Array<() => void> = [];
  const track = (task: Promise<unknown>): void => {
    pendingCount += 1;
    void task.finally(() => {
      pendingCount -= 1;
      if (pendingCount === 0) {
        const waiters = idleWaiters;
        idleWaiters = [];
        for (const resolve of waiters) resolve();
      }
    });
  };
  const whenIdle = (): Promise<void> =>
    pendingCount === 0
      ? Promise.resolve()
      : new Promise((resolve) => idleWaiters.push(resolve));

  const setStatus = (next: Status): void => {
    status = next;
    const lines: Record<Status, string> = {
      idle: file ? "Scan loaded." : "No scan loaded.",
      uploading: "Classifying scan...",
      predicted: "Prediction ready.",
      explaining: "Computing explanation...",
      error: "Request failed.",
    };
    statusLine.textContent = lines[next];
  };

  const setTabsEnabled = (enabled: boolean): void => {
    for (const button of tabButtons) button.disabled = !enabled;
  };

  const setActiveTab = (name: string | null): void => {
    for (const button of tabButtons) {
      button.classList.toggle("active", button.dataset.method === name);
    }
  };

  const hideBanner = (): void => {
    banner.hidden = true;
    retryButton.hidden = true;
    retryAction = null;
  };

  const showError = (err: unknown): void => {
    const apiError = err instanceof ApiError ? err : null;
    errorMessage.textContent = apiError
      ? apiError.message
      : err instanceof Error
        ? err.message
        : String(err);
    banner.hidden = false;
    // A timed-out explanation is worth retrying; other failures need a
    // different input, so no retry affordance for those.
    retryButton.hidden = !(apiError && apiError.status === 504);
    if (prediction) {
      setStatus("predicted");
    } else {
      card.hidden = true;
      setTabsEnabled(false);
      setActiveTab(null);
      setStatus("idle");
    }
  };

  const formatPercent = (fraction: number): string =>
    `${(fraction * 100).toFixed(1)}%`;

  const renderPrediction = (resp: PredictionResponse): void => {
    headline.textContent = `${resp.top_class} — ${formatPercent(resp.confidence)}`;
    modelLine.textContent = `model: ${resp.model_name} (${resp.latency_ms.toFixed(1)} ms)`;
    barsBox.innerHTML = "";
    // Render in canonical class order no matter how the JSON was keyed.
    for (const name of CLASS_ORDER) {
      const value = resp.probabilities[name] ?? 0;
      const row = document.createElement("div");
      row.className = "bar-row";
      row.dataset.class = name;
      const label = document.createElement("span");
      label.className = "bar-label";
      label.textContent = name;
      const barTrack = document.createElement("div");
      barTrack.className = "bar-track";
      const fill = document.createElement("div");
      fill.className = "bar-fill";
      fill.style.width = `${Math.max(0, Math.min(1, value)) * 100}%`;
      barTrack.appendChild(fill);
      const percent = document.createElement("span");
      percent.className = "bar-percent";
      percent.textContent = formatPercent(value);
      row.append(label, barTrack, percent);
      barsBox.appendChild(row);
    }
    card.hidden = false;
  };

  const applyOpacity = (): void => {
    for (const img of explainView.querySelectorAll<HTMLImageElement>(
      ".overlay-img",
    )) {
      img.style.opacity = String(overlayOpacity);
    }
  };

  const overlayFigure = (resp: ExplainResponse): HTMLElement => {
    const figure = document.createElement("figure");
    figure.className = "panel overlay-panel";
    figure.dataset.methodPanel = resp.method;
    const stack = document.createElement("div");
    stack.className = "image-stack";
    const base = document.createElement("img");
    base.className = "base-img";
    base.src = previewUrl;
    base.alt = "original scan";
    const overlay = document.createElement("img");
    overlay.className = "overlay-img";
    overlay.src = `data:image/png;base64,${resp.overlay_image}`;
    overlay.alt = `${resp.method} heatmap overlay`;
    overlay.style.opacity = String(overlayOpacity);
    stack.append(base, overlay);
    const caption = document.createElement("figcaption");
    const label = METHOD_LABELS[resp.method as ExplainMethod] ?? resp.method;
    caption.textContent =
      `${label}: ${resp.target_class} at ${formatPercent(resp.class_probability)}` +
      (Object.keys(resp.params).length > 0
        ? ` (${JSON.stringify(resp.params)})`
        : "");
    figure.append(stack, caption);
    return figure;
  };

  const originalFigure = (): HTMLElement => {
    const figure = document.createElement("figure");
    figure.className = "panel original-panel";
    const img = document.createElement("img");
    img.className = "original-img";
    img.src = previewUrl;
    img.alt = "original scan";
    const caption = document.createElement("figcaption");
    caption.textContent = "Original";
    figure.append(img, caption);
    return figure;
  };

  const renderSideBySide = (resp: ExplainResponse): void => {
    explainView.innerHTML = "";
    const row = document.createElement("div");
    row.className = "panel-row";
    row.append(originalFigure(), overlayFigure(resp));
    explainView.appendChild(row);
    applyOpacity();
  };

  const renderCompare = (resps: ExplainResponse[]): void => {
    explainView.innerHTML = "";
    const row = document.createElement("div");
    row.className = "panel-row compare-row";
    for (const resp of resps) row.appendChild(overlayFigure(resp));
    explainView.appendChild(row);
    applyOpacity();
  };

  const explainParams = (method: ExplainMethod): Record<string, unknown> => {
    if (method !== "occlusion") return {};
    return {
      patch_size: Number(patchInput.value),
      stride: Number(strideInput.value),
    };
  };

  const requestExplain = (method: ExplainMethod): Promise<ExplainResponse> => {
    const params = explainParams(method);
    return cache.fetch(method, params, () => {
      if (!file) throw new Error("no scan loaded");
      return client.explain(file, method, params);
    });
  };

  const showMethod = (method: ExplainMethod): void => {
    hideBanner();
    retryAction = () => showMethod(method);
    setActiveTab(method);
    setStatus("explaining");
    track(
      requestExplain(method)
        .then((resp) => {
          renderSideBySide(resp);
          setStatus("predicted");
        })
        .catch((err) => showError(err)),
    );
  };

  const showCompare = (): void => {
    hideBanner();
    retryAction = () => showCompare();
    setActiveTab("compare");
    setStatus("explaining");
    track(
      Promise.all(EXPLAIN_METHODS.map((method) => requestExplain(method)))
        .then((resps) => {
          renderCompare(resps);
          setStatus("predicted");
        })
        .catch((err) => showError(err)),
    );
  };

  for (const button of tabButtons) {
    button.addEventListener("click", () => {
      const method = button.dataset.method;
      if (status !== "predicted" && status !== "explaining") return;
      if (method === "compare") {
        showCompare();
      } else if (method) {
        showMethod(method as ExplainMethod);
      }
    });
  }

  opacitySlider.addEventListener("input", () => {
    overlayOpacity = Number(opacitySlider.value);
    applyOpacity();
  });

  fileInput.addEventListener("change", () => {
    const chosen = fileInput.files && fileInput.files[0];
    if (!chosen) return;
    file = chosen;
    if (previewUrl) URL.revokeObjectURL(previewUrl);
    previewUrl = URL.createObjectURL(chosen);
    preview.src = previewUrl;
    preview.hidden = false;
    prediction = null;
    cache.clear();
    explainView.innerHTML = "";
    card.hidden = true;
    setTabsEnabled(false);
    setActiveTab(null);
    hideBanner();
    setStatus("uploading");
    track(
      client
        .predict(chosen)
        .then((resp) => {
          prediction = resp;
          renderPrediction(resp);
          setTabsEnabled(true);
          setStatus("predicted");
        })
        .catch((err) => showError(err)),
    );
  });

  dismissButton.addEventListener("click", () => hideBanner());

  retryButton.addEventListener("click", () => {
    const action = retryAction;
    hideBanner();
    if (action) action();
  });

  return {
    root,
    status: () => status,
    whenIdle,
  };
}
