// Typed client for the diagnosis service. The UI never computes a verdict
// itself; everything it shows comes from these responses.

export interface ObservedEntry {
  symptom: string;
  weeks: number;
}

export interface HistoryEntry {
  condition: string;
  count: number;
}

export interface DiagnoseRequest {
  id: string;
  observed: ObservedEntry[];
  history: HistoryEntry[];
}

export interface Diagnostic {
  severity: string;
  code: string;
  message: string;
  line: number | null;
}

export interface DiagnoseResponse {
  record: DiagnoseRequest;
  disorders: string[];
  episodes: Record<string, boolean>;
  explanations: Record<string, string>;
  warnings: Diagnostic[];
}

export interface ExplainNode {
  fact: { relation: string; args: (string | number)[] };
  rule: string | null;
  line: number | null;
  bindings: Record<string, string | number>;
  children: ExplainNode[];
  checks: Record<string, unknown>[];
}

export interface DisorderInfo {
  symbol: string;
  display: string;
}

export interface Vocabulary {
  depressive_pole: string[];
  manic_pole: string[];
  affective_cluster: string[];
  manic_core: string[];
  non_mood: string[];
  history_conditions: string[];
  disorders: DisorderInfo[];
}

export interface ProgramInfo {
  source: string;
  lint: Diagnostic[];
  strata: string[][];
  vocabulary: Vocabulary;
  program_hash: string;
}

export class ServiceError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly detail: unknown = null,
  ) {
    super(message);
  }
}

type FetchLike = typeof globalThis.fetch;

export class CdssClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = globalThis.fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      throw new ServiceError(`${path} failed: ${response.status}`, response.status, body);
    }
    return body as T;
  }

  diagnose(request: DiagnoseRequest): Promise<DiagnoseResponse> {
    return this.request<DiagnoseResponse>("/diagnose", {
      method: "POST",
      body: JSON.stringify(request),
    });
  }

  explainById(id: string): Promise<ExplainNode> {
    return this.request<ExplainNode>("/explain", {
      method: "POST",
      body: JSON.stringify({ id }),
    });
  }

  explainFact(fact: string): Promise<ExplainNode> {
    return this.request<ExplainNode>("/explain", {
      method: "POST",
      body: JSON.stringify({ fact }),
    });
  }

  program(): Promise<ProgramInfo> {
    return this.request<ProgramInfo>("/program");
  }

  health(): Promise<{ status: string; program_hash: string }> {
    return this.request("/health");
  }
}
