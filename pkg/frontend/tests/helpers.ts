// Shared test scaffolding: a canned program document and a fake client.

import type {
  DiagnoseRequest,
  DiagnoseResponse,
  ExplainNode,
  ProgramInfo,
} from "../src/api";

export function fixtureProgram(): ProgramInfo {
  return {
    source: "// test program",
    lint: [],
    strata: [["Observed", "History"], ["Diagnosis"]],
    vocabulary: {
      depressive_pole: [
        "depressed_mood",
        "diminished_interest_pleasure",
        "reduced_concentration",
        "low_self_worth",
        "hopelessness",
        "recurrent_thoughts_death_suicide",
        "disrupted_excessive_sleep",
        "change_in_appetite_weight",
        "psychomotor_disturbances",
        "reduced_energy",
      ],
      manic_pole: [
        "euphoria_irritability_expansiveness",
        "increased_activity_energy",
        "increased_talkativeness",
        "racing_thoughts",
        "increased_self_esteem",
        "decreased_need_for_sleep",
        "distractibility",
        "impulsive_reckless_behavior",
        "increased_sexual_sociability_goal_directed_activity",
      ],
      affective_cluster: ["depressed_mood", "diminished_interest_pleasure"],
      manic_core: ["euphoria_irritability_expansiveness", "increased_activity_energy"],
      non_mood: ["delusions", "passivity_experiences", "disorganized_behavior"],
      history_conditions: ["depressive", "manic", "mixed", "hypomanic"],
      disorders: [
        { symbol: "Bipolar_I", display: "Bipolar I" },
        { symbol: "Bipolar_II", display: "Bipolar II" },
        {
          symbol: "Single_Episode_Depressive_Disorder",
          display: "Single Episode Depressive Disorder",
        },
        { symbol: "Recurrent_Depressive_Disorder", display: "Recurrent Depressive Disorder" },
      ],
    },
    program_hash: "abc123",
  };
}

export function emptyResponse(request: DiagnoseRequest): DiagnoseResponse {
  return {
    record: request,
    disorders: [],
    episodes: { depressive: false, manic: false, mixed: false, hypomanic: false },
    explanations: {},
    warnings: [],
  };
}

export function leafTree(): ExplainNode {
  return {
    fact: { relation: "History", args: ["No. 1", "hypomanic", 1] },
    rule: null,
    line: null,
    bindings: {},
    children: [],
    checks: [],
  };
}

/** Fake service: scripted responses, recorded requests, optional delays. */
export class FakeClient {
  requests: DiagnoseRequest[] = [];
  responses: ((request: DiagnoseRequest) => Promise<DiagnoseResponse>)[] = [];
  trees: Record<string, ExplainNode> = {};

  queue(fn: (request: DiagnoseRequest) => Promise<DiagnoseResponse>): void {
    this.responses.push(fn);
  }

  async diagnose(request: DiagnoseRequest): Promise<DiagnoseResponse> {
    this.requests.push(request);
    const next = this.responses.shift();
    if (next === undefined) {
      return emptyResponse(request);
    }
    return next(request);
  }

  async explainById(id: string): Promise<ExplainNode> {
    const tree = this.trees[id];
    if (tree === undefined) {
      throw new Error(`no tree for ${id}`);
    }
    return tree;
  }

  async explainFact(): Promise<ExplainNode> {
    throw new Error("not used in unit tests");
  }

  async program(): Promise<ProgramInfo> {
    return fixtureProgram();
  }

  async health(): Promise<{ status: string; program_hash: string }> {
    return { status: "ok", program_hash: "abc123" };
  }
}

export function expandAll(root: HTMLElement): void {
  // Repeated passes: expanding a node lazily builds children that may
  // themselves be collapsed <details> elements.
  for (let pass = 0; pass < 50; pass += 1) {
    const closed = Array.from(root.querySelectorAll("details:not([open])"));
    if (closed.length === 0) {
      return;
    }
    for (const node of closed) {
      (node as HTMLDetailsElement).open = true;
      node.dispatchEvent(new Event("toggle"));
    }
  }
}
