import type {
  Annotation,
  CollectionSummary,
  DocumentPayload,
  DocumentSummary,
  ExportStatus,
  ImportReport,
  Op,
  OpsResult,
  PluginInfo,
  Region,
  ResourceInfo,
  SchemaPayload,
  TransformationPlan,
  ValidationResult,
} from "./types.js";

/** Gateway error carrying the machine-readable code from the error body. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly extra: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function raiseFor(response: Response): Promise<never> {
  let code = "http_error";
  let message = `${response.status} ${response.statusText}`;
  let extra: Record<string, unknown> = {};
  try {
    const body = await response.json();
    if (body && typeof body === "object" && body.error) {
      const { code: c, message: m, ...rest } = body.error;
      if (typeof c === "string") code = c;
      if (typeof m === "string") message = m;
      extra = rest;
    }
  } catch {
    // non-JSON body; keep the status line
  }
  throw new ApiError(response.status, code, message, extra);
}

export interface MutationOptions {
  expectedRevision?: number;
}

/**
 * Thin typed client for the gateway. Holds no collection state; every
 * mutation round-trips and returns the server's new revision.
 */
export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) await raiseFor(response);
    return (await response.json()) as T;
  }

  private get<T>(path: string): Promise<T> {
    return this.request<T>("GET", path);
  }

  async plugins(): Promise<PluginInfo[]> {
    const body = await this.get<{ plugins: PluginInfo[] }>("/plugins");
    return body.plugins;
  }

  async collections(): Promise<CollectionSummary[]> {
    const body = await this.get<{ collections: CollectionSummary[] }>("/collections");
    return body.collections;
  }

  createCollection(name: string): Promise<CollectionSummary> {
    return this.request<CollectionSummary>("POST", "/collections", { name });
  }

  collection(cid: string): Promise<CollectionSummary> {
    return this.get<CollectionSummary>(`/collections/${cid}`);
  }

  schema(cid: string): Promise<{ revision: number; schema: SchemaPayload }> {
    return this.get(`/collections/${cid}/schema`);
  }

  validation(cid: string): Promise<ValidationResult> {
    return this.get(`/collections/${cid}/validation`);
  }

  async documents(cid: string): Promise<DocumentSummary[]> {
    const body = await this.get<{ documents: DocumentSummary[] }>(
      `/collections/${cid}/documents`,
    );
    return body.documents;
  }

  async document(cid: string, docId: string): Promise<{ revision: number; document: DocumentPayload }> {
    return this.get(`/collections/${cid}/documents/${docId}`);
  }

  putDocument(
    cid: string,
    document: DocumentPayload,
    options: MutationOptions = {},
  ): Promise<{ revision: number }> {
    return this.request("PUT", `/collections/${cid}/documents/${document.id}`, {
      document,
      expected_revision: options.expectedRevision ?? null,
    });
  }

  async annotations(cid: string, docId: string, path: string): Promise<Annotation[]> {
    const body = await this.get<{ revision: number; annotations: Annotation[] }>(
      `/collections/${cid}/documents/${docId}/annotations?path=${encodeURIComponent(path)}`,
    );
    return body.annotations;
  }

  annotate(
    cid: string,
    docId: string,
    path: string,
    region: Region,
    explanation: string,
    options: MutationOptions = {},
  ): Promise<{ revision: number }> {
    return this.request("POST", `/collections/${cid}/annotations`, {
      document_id: docId,
      path,
      region,
      explanation,
      expected_revision: options.expectedRevision ?? null,
    });
  }

  async resources(cid: string): Promise<Record<string, ResourceInfo>> {
    const body = await this.get<{ resources: Record<string, ResourceInfo> }>(
      `/collections/${cid}/resources`,
    );
    return body.resources;
  }

  blobUrl(cid: string, rid: string): string {
    return `${this.baseUrl}/collections/${cid}/resources/${rid}/blob`;
  }

  runImport(
    cid: string,
    plugin: string,
    config: Record<string, unknown>,
  ): Promise<{ revision: number; report: ImportReport }> {
    return this.request("POST", `/collections/${cid}/imports`, { plugin, config });
  }

  applyOps(cid: string, ops: Op[], options: MutationOptions & { dryRun?: boolean } = {}): Promise<OpsResult> {
    return this.request("POST", `/collections/${cid}/ops`, {
      ops,
      dry_run: options.dryRun ?? false,
      expected_revision: options.expectedRevision ?? null,
    });
  }

  applyPlan(cid: string, plan: TransformationPlan, options: MutationOptions & { dryRun?: boolean } = {}): Promise<OpsResult> {
    return this.request("POST", `/collections/${cid}/ops`, {
      plan,
      dry_run: options.dryRun ?? false,
      expected_revision: options.expectedRevision ?? null,
    });
  }

  async startExport(
    cid: string,
    body: { roots: string[]; title: string; language?: string; seed?: number | null },
  ): Promise<ExportStatus> {
    const result = await this.request<{ export: ExportStatus }>(
      "POST",
      `/collections/${cid}/exports`,
      body,
    );
    return result.export;
  }

  async exportStatus(exportId: string): Promise<ExportStatus> {
    const result = await this.get<{ export: ExportStatus }>(`/exports/${exportId}`);
    return result.export;
  }

  packageUrl(exportId: string): string {
    return `${this.baseUrl}/exports/${exportId}/package`;
  }

  /** Poll an export job until it leaves the queue; resolves on done, rejects on failed. */
  async waitForExport(exportId: string, pollMs = 250, timeoutMs = 60_000): Promise<ExportStatus> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.exportStatus(exportId);
      if (status.status === "done") return status;
      if (status.status === "failed") {
        const err = status.error ?? { code: "export_failed", message: "export failed" };
        throw new ApiError(422, err.code, err.message);
      }
      if (Date.now() > deadline) {
        throw new ApiError(408, "export_timeout", `export ${exportId} still ${status.status}`);
      }
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
  }

  async downloadPackage(exportId: string): Promise<ArrayBuffer> {
    const response = await fetch(this.packageUrl(exportId));
    if (!response.ok) await raiseFor(response);
    return response.arrayBuffer();
  }
}

/**
 * Serializes mutations: the UI keeps at most one in flight, so revision
 * tokens chain naturally and conflicts only come from other clients.
 */
export class MutationQueue {
  private tail: Promise<unknown> = Promise.resolve();

  run<T>(task: () => Promise<T>): Promise<T> {
    const next = this.tail.then(task, task);
    this.tail = next.catch(() => undefined);
    return next;
  }
}
