// Wire types mirroring the gateway's canonical JSON bodies.

export type ElementKind = "descriptive" | "resource" | "link" | "structural";

export interface SchemaElement {
  id: string;
  name: string;
  kind: ElementKind;
  parent: string | null;
  position: number;
  attributes: Record<string, string>;
}

/** Elements arrive as a preorder list; order semantics live in parent/position. */
export interface SchemaPayload {
  version: number;
  elements: SchemaElement[];
}

export type FieldValue =
  | { kind: "descriptive"; text: string }
  | { kind: "resource"; resource_id: string }
  | { kind: "link"; document_id: string }
  | { kind: "structural"; children: ValueEntry[] };

/** [element id, value] pair; element ids may repeat (multi-valued). */
export type ValueEntry = [string, FieldValue];

export interface DocumentPayload {
  id: string;
  title: string;
  values: ValueEntry[];
}

export interface DocumentSummary {
  id: string;
  title: string;
  value_count: number;
}

export interface CollectionSummary {
  id: string;
  name: string;
  schema_version: number;
  revision: number;
  document_count: number;
  resource_count: number;
}

export interface PluginInfo {
  name: string;
  version: string;
  description: string;
}

export type ResourceOrigin =
  | { type: "local"; sha256: string }
  | { type: "external"; url: string };

export interface ResourceInfo {
  id: string;
  media_type: string;
  origin: ResourceOrigin;
  caption: string | null;
  byte_size: number;
}

/** Normalized image rectangle; all coordinates in [0, 1]. */
export interface Region {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface Annotation {
  region: Region;
  explanation: string;
}

export type Op =
  | { op: "rename"; element_id: string; new_name: string }
  | { op: "remove"; element_id: string }
  | { op: "merge"; source_id: string; target_id: string }
  | { op: "move"; element_id: string; new_parent: string | null; position: number }
  | { op: "add_structural"; name: string; parent: string | null; position: number };

export interface TransformationPlan {
  plan_id: string;
  description: string;
  authored_schema_version: number;
  ops: Op[];
}

export interface OpReport {
  op: Op;
  documents_touched: number;
  values_removed: number;
  values_moved: number;
  values_retagged: number;
}

export interface SchemaDiff {
  added: string[];
  removed: string[];
  renamed: [string, string, string][];
  moved: string[];
  before_count: number;
  after_count: number;
}

export interface OpsResult {
  revision: number;
  dry_run: boolean;
  schema_version: number;
  schema: SchemaPayload;
  report: {
    ops: OpReport[];
    final_element_count: number;
    final_schema_version: number;
    documents_touched: number;
    warnings: string[];
  };
  diff: SchemaDiff;
}

export interface ImportReport {
  plugin: string;
  documents_imported: number;
  resources_imported: number;
  links_resolved: number;
  links_dropped: number;
  capped: boolean;
  warnings: string[];
}

export type ExportState = "queued" | "running" | "done" | "failed";

export interface ExportStatus {
  id: string;
  collection_id: string;
  status: ExportState;
  revision: number;
  title: string;
  error: { code: string; message: string } | null;
  manifest_identifier: string | null;
  byte_size: number | null;
}

export interface Violation {
  code: string;
  message: string;
  document_id: string | null;
}

export interface ValidationResult {
  revision: number;
  ok: boolean;
  violations: Violation[];
}

export interface ErrorBody {
  error: {
    code: string;
    message: string;
    [extra: string]: unknown;
  };
}
