import type { Op } from "./types.js";

// The schema editor compiles pointer/keyboard gestures into ops and sends
// them to the gateway; no schema logic runs locally. This reducer is pure so
// the op stream a gesture sequence produces can be verified headlessly.

export type GestureEvent =
  | { kind: "select"; elementId: string | null }
  | { kind: "beginRename" }
  | { kind: "typeName"; text: string }
  | { kind: "commitRename" }
  | { kind: "requestRemove" }
  | { kind: "confirmRemove" }
  | { kind: "beginMerge" }
  | { kind: "pickMergeTarget"; elementId: string }
  | { kind: "dragStart"; elementId: string }
  | { kind: "dropOn"; parent: string | null; position: number }
  | { kind: "beginGroup" }
  | { kind: "placeGroup"; parent: string | null; position: number }
  | { kind: "cancel" };

export type GestureMode =
  | "idle"
  | "renaming"
  | "confirming-remove"
  | "picking-merge-target"
  | "dragging"
  | "naming-group";

export interface GestureState {
  selected: string | null;
  mode: GestureMode;
  /** Text buffer for the rename box or the new group's name. */
  draft: string;
  dragging: string | null;
}

export const IDLE: GestureState = {
  selected: null,
  mode: "idle",
  draft: "",
  dragging: null,
};

export interface GestureOutcome {
  state: GestureState;
  /** Op to send to the gateway, if the gesture completed one. */
  op: Op | null;
  /** Set when the event is invalid in the current mode; state is unchanged. */
  error: string | null;
}

function ok(state: GestureState, op: Op | null = null): GestureOutcome {
  return { state, op, error: null };
}

function rejected(state: GestureState, error: string): GestureOutcome {
  return { state, op: null, error };
}

function backToIdle(state: GestureState, selected: string | null): GestureState {
  return { selected, mode: "idle", draft: "", dragging: null };
}

export function reduceGesture(state: GestureState, event: GestureEvent): GestureOutcome {
  switch (event.kind) {
    case "select":
      // selecting always interrupts whatever was pending
      return ok(backToIdle(state, event.elementId));

    case "cancel":
      return ok(backToIdle(state, state.selected));

    case "beginRename":
      if (state.mode !== "idle" || state.selected === null) {
        return rejected(state, "select an element to rename");
      }
      return ok({ ...state, mode: "renaming", draft: "" });

    case "typeName":
      if (state.mode !== "renaming" && state.mode !== "naming-group") {
        return rejected(state, "no name box is open");
      }
      return ok({ ...state, draft: event.text });

    case "commitRename": {
      if (state.mode !== "renaming" || state.selected === null) {
        return rejected(state, "no rename in progress");
      }
      const name = state.draft.trim();
      if (!name) return rejected(state, "name must be non-empty");
      return ok(backToIdle(state, state.selected), {
        op: "rename",
        element_id: state.selected,
        new_name: name,
      });
    }

    case "requestRemove":
      if (state.mode !== "idle" || state.selected === null) {
        return rejected(state, "select an element to remove");
      }
      return ok({ ...state, mode: "confirming-remove" });

    case "confirmRemove":
      if (state.mode !== "confirming-remove" || state.selected === null) {
        return rejected(state, "no removal pending");
      }
      return ok(backToIdle(state, null), {
        op: "remove",
        element_id: state.selected,
      });

    case "beginMerge":
      if (state.mode !== "idle" || state.selected === null) {
        return rejected(state, "select the merge source first");
      }
      return ok({ ...state, mode: "picking-merge-target" });

    case "pickMergeTarget": {
      if (state.mode !== "picking-merge-target" || state.selected === null) {
        return rejected(state, "no merge in progress");
      }
      if (event.elementId === state.selected) {
        return rejected(state, "cannot merge an element into itself");
      }
      // survivor becomes the selection
      return ok(backToIdle(state, event.elementId), {
        op: "merge",
        source_id: state.selected,
        target_id: event.elementId,
      });
    }

    case "dragStart":
      if (state.mode !== "idle") return rejected(state, "finish the current gesture first");
      return {
        state: { selected: event.elementId, mode: "dragging", draft: "", dragging: event.elementId },
        op: null,
        error: null,
      };

    case "dropOn": {
      if (state.mode !== "dragging" || state.dragging === null) {
        return rejected(state, "nothing is being dragged");
      }
      if (event.parent === state.dragging) {
        return rejected(state, "cannot drop an element into itself");
      }
      return ok(backToIdle(state, state.dragging), {
        op: "move",
        element_id: state.dragging,
        new_parent: event.parent,
        position: event.position,
      });
    }

    case "beginGroup":
      if (state.mode !== "idle") return rejected(state, "finish the current gesture first");
      return ok({ ...state, mode: "naming-group", draft: "" });

    case "placeGroup": {
      if (state.mode !== "naming-group") return rejected(state, "no group in progress");
      const name = state.draft.trim();
      if (!name) return rejected(state, "group name must be non-empty");
      return ok(backToIdle(state, state.selected), {
        op: "add_structural",
        name,
        parent: event.parent,
        position: event.position,
      });
    }
  }
}

/**
 * Canonical gesture sequence a user would perform for one op. Used to replay
 * saved plans through the editor exactly as hand gestures would.
 */
export function gesturesForOp(op: Op): GestureEvent[] {
  switch (op.op) {
    case "rename":
      return [
        { kind: "select", elementId: op.element_id },
        { kind: "beginRename" },
        { kind: "typeName", text: op.new_name },
        { kind: "commitRename" },
      ];
    case "remove":
      return [
        { kind: "select", elementId: op.element_id },
        { kind: "requestRemove" },
        { kind: "confirmRemove" },
      ];
    case "merge":
      return [
        { kind: "select", elementId: op.source_id },
        { kind: "beginMerge" },
        { kind: "pickMergeTarget", elementId: op.target_id },
      ];
    case "move":
      return [
        { kind: "dragStart", elementId: op.element_id },
        { kind: "dropOn", parent: op.new_parent, position: op.position },
      ];
    case "add_structural":
      return [
        { kind: "beginGroup" },
        { kind: "typeName", text: op.name },
        { kind: "placeGroup", parent: op.parent, position: op.position },
      ];
  }
}

/** Run a gesture sequence from idle, collecting the ops it compiles to. */
export function runGestures(events: GestureEvent[], start: GestureState = IDLE): {
  state: GestureState;
  ops: Op[];
  errors: string[];
} {
  let state = start;
  const ops: Op[] = [];
  const errors: string[] = [];
  for (const event of events) {
    const outcome = reduceGesture(state, event);
    state = outcome.state;
    if (outcome.op) ops.push(outcome.op);
    if (outcome.error) errors.push(outcome.error);
  }
  return { state, ops, errors };
}
