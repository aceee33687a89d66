// Thin REST client. The server owns all encoding math; the workbench only
// ships query documents up and draws the colors that come back.

export type Rgba = [number, number, number, number];
export type BlendMode = "add" | "multiply" | "mask";

export interface CurveSpec {
  keyframes?: [number, number][];
  preset?: { name: string; [param: string]: string | number };
}

export interface ScaleSpec {
  stops: [number, Rgba][];
}

export interface LayerSpec {
  parameter: string;
  curve: CurveSpec;
  scale: ScaleSpec;
  blend: BlendMode;
  multiplier: number;
}

export interface QuerySpec {
  layers: LayerSpec[];
}

export interface Diagnostic {
  severity: "error" | "warning";
  message: string;
  path: string;
}

export interface DatasetSummary {
  dataset_id: string;
  level: number;
  playthroughs: number;
  district_count: number;
  action_vocabulary: string[];
  points: number;
}

export interface ParameterInfo {
  dataset_id: string;
  district_count: number;
  action_vocabulary: string[];
  parameters: Record<string, [number, number] | null>;
}

export interface Geometry {
  polylines: [number, number][][];
  x_ticks: [number, string][];
  y_ticks: [number, string][];
  plot_box: [number, number, number, number];
}

export interface EvaluateResponse {
  dataset_id: string;
  n_frames: number;
  point_index: [number, number][];
  frames: Rgba[][];
  geometry?: Geometry;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public diagnostics: Diagnostic[] = [],
  ) {
    super(message);
  }
}

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async uploadDataset(jsonl: string): Promise<DatasetSummary> {
    const body = await this.request("/api/datasets", {
      method: "POST",
      body: jsonl,
    });
    return body.summary as DatasetSummary;
  }

  async listDatasets(): Promise<DatasetSummary[]> {
    const body = await this.request("/api/datasets");
    return body.datasets as DatasetSummary[];
  }

  async parameters(datasetId: string): Promise<ParameterInfo> {
    return (await this.request(
      `/api/datasets/${datasetId}/parameters`,
    )) as ParameterInfo;
  }

  async evaluate(
    datasetId: string,
    query: QuerySpec,
    nFrames: number,
    includeGeometry = false,
  ): Promise<EvaluateResponse> {
    return (await this.request("/api/evaluate", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        dataset_id: datasetId,
        query,
        n_frames: nFrames,
        include_geometry: includeGeometry,
      }),
    })) as EvaluateResponse;
  }

  async renderAnimation(
    datasetId: string,
    query: QuerySpec,
    render: Record<string, unknown>,
  ): Promise<Blob> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/render`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ dataset_id: datasetId, query, render }),
    });
    if (!resp.ok) throw await this.toError(resp);
    return resp.blob();
  }

  private async request(path: string, init?: RequestInit): Promise<any> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!resp.ok) throw await this.toError(resp);
    return resp.json();
  }

  private async toError(resp: Response): Promise<ApiError> {
    let message = `request failed (${resp.status})`;
    let diagnostics: Diagnostic[] = [];
    try {
      const body = await resp.json();
      if (body.error) message = body.error;
      if (Array.isArray(body.diagnostics)) {
        diagnostics = body.diagnostics;
        if (diagnostics.length > 0) message = diagnostics[0].message;
      }
    } catch {
      // non-JSON error body; keep the status message
    }
    return new ApiError(resp.status, message, diagnostics);
  }
}
