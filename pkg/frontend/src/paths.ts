import type { DocumentPayload, FieldValue, SchemaElement, ValueEntry } from "./types.js";

// Value paths address one value inside a document: steps of element id plus
// occurrence index among same-id siblings, rendered as "eid[2]/child". The
// index is omitted when it is 0 and the id occurs once, matching how the
// gateway prints paths.

interface Step {
  eid: string;
  index: number;
  /** true when the container holds several values with this eid. */
  ambiguous: boolean;
}

function formatStep(step: Step): string {
  return step.index > 0 || step.ambiguous ? `${step.eid}[${step.index}]` : step.eid;
}

export function formatPath(steps: Step[]): string {
  return steps.map(formatStep).join("/");
}

export interface ImageTarget {
  /** Path string accepted by the annotation endpoints. */
  path: string;
  resourceId: string;
  /** Element name chain, for display. */
  label: string;
}

/**
 * Collect every resource-valued path in a document whose resource is an
 * image, walking structural groups depth-first in value order.
 */
export function imageTargets(
  doc: DocumentPayload,
  elements: SchemaElement[],
  mediaTypes: Record<string, string>,
): ImageTarget[] {
  const names = new Map(elements.map((e) => [e.id, e.name]));
  const found: ImageTarget[] = [];

  const walk = (entries: ValueEntry[], prefix: Step[], labels: string[]) => {
    const total = new Map<string, number>();
    for (const [eid] of entries) total.set(eid, (total.get(eid) ?? 0) + 1);
    const seen = new Map<string, number>();
    for (const [eid, value] of entries) {
      const index = seen.get(eid) ?? 0;
      seen.set(eid, index + 1);
      const step: Step = { eid, index, ambiguous: (total.get(eid) ?? 0) > 1 };
      const label = names.get(eid) ?? eid;
      visit(value, [...prefix, step], [...labels, label]);
    }
  };

  const visit = (value: FieldValue, steps: Step[], labels: string[]) => {
    if (value.kind === "structural") {
      walk(value.children, steps, labels);
      return;
    }
    if (value.kind !== "resource") return;
    const media = mediaTypes[value.resource_id] ?? "";
    if (!media.startsWith("image/")) return;
    found.push({
      path: formatPath(steps),
      resourceId: value.resource_id,
      label: labels.join(" / "),
    });
  };

  walk(doc.values, [], []);
  return found;
}

/** Top-level descriptive values, editable in the document panel. */
export interface TextTarget {
  path: string;
  label: string;
  text: string;
}

export function textTargets(doc: DocumentPayload, elements: SchemaElement[]): TextTarget[] {
  const names = new Map(elements.map((e) => [e.id, e.name]));
  const found: TextTarget[] = [];

  const walk = (entries: ValueEntry[], prefix: Step[], labels: string[]) => {
    const total = new Map<string, number>();
    for (const [eid] of entries) total.set(eid, (total.get(eid) ?? 0) + 1);
    const seen = new Map<string, number>();
    for (const [eid, value] of entries) {
      const index = seen.get(eid) ?? 0;
      seen.set(eid, index + 1);
      const step: Step = { eid, index, ambiguous: (total.get(eid) ?? 0) > 1 };
      const label = names.get(eid) ?? eid;
      if (value.kind === "descriptive") {
        found.push({
          path: formatPath([...prefix, step]),
          label: [...labels, label].join(" / "),
          text: value.text,
        });
      } else if (value.kind === "structural") {
        walk(value.children, [...prefix, step], [...labels, label]);
      }
    }
  };

  walk(doc.values, [], []);
  return found;
}

/**
 * Return a copy of the document with the descriptive value at ``path``
 * replaced. Path steps follow the grammar above.
 */
export function withTextReplaced(doc: DocumentPayload, path: string, text: string): DocumentPayload {
  const steps = path.split("/").map((raw) => {
    const m = /^([^/\[\]]+)(?:\[(\d+)\])?$/.exec(raw.trim());
    if (!m) throw new Error(`malformed path step: ${raw}`);
    return { eid: m[1], index: m[2] ? parseInt(m[2], 10) : 0 };
  });

  let replaced = false;
  const rewrite = (entries: ValueEntry[], depth: number): ValueEntry[] => {
    const { eid, index } = steps[depth];
    let seen = 0;
    return entries.map(([id, value]): ValueEntry => {
      if (id !== eid) return [id, value];
      const mine = seen === index;
      seen += 1;
      if (!mine) return [id, value];
      if (depth === steps.length - 1) {
        if (value.kind !== "descriptive") throw new Error(`${path} is not a text value`);
        replaced = true;
        return [id, { kind: "descriptive", text }];
      }
      if (value.kind !== "structural") throw new Error(`${path}: step ${depth} is not a group`);
      return [id, { kind: "structural", children: rewrite(value.children, depth + 1) }];
    });
  };

  const values = rewrite(doc.values, 0);
  if (!replaced) throw new Error(`${path} not found in document ${doc.id}`);
  return { ...doc, values };
}
