// Application wiring: form on the left, diagnosis and what-if deltas on the
// right. All verdict strings come from service responses; the form is built
// from the vocabulary served by /program so symptom names are never
// duplicated here.

import { CdssClient, DiagnoseResponse, ExplainNode, ProgramInfo } from "./api";
import {
  FormInvalid,
  FormState,
  buildDiagnoseRequest,
  compareToBaseline,
  emptyForm,
} from "./form";
import { renderTreeNode } from "./tree";

const NO_DIAGNOSIS = "no clear diagnosis";

export class App {
  form: FormState = emptyForm();
  traces: Record<string, ExplainNode> = {};
  lastSubmit: Promise<void> = Promise.resolve();
  private seq = 0;

  constructor(
    readonly root: HTMLElement,
    readonly client: CdssClient,
    readonly program: ProgramInfo,
  ) {}

  static async create(root: HTMLElement, client: CdssClient): Promise<App> {
    const program = await client.program();
    const app = new App(root, client, program);
    app.buildDom();
    return app;
  }

  displayName(symbol: string): string {
    const info = this.program.vocabulary.disorders.find((d) => d.symbol === symbol);
    return info ? info.display : symbol;
  }

  private doc(): Document {
    return this.root.ownerDocument;
  }

  private buildDom(): void {
    const doc = this.doc();
    this.root.innerHTML = `
      <div class="layout">
        <form class="intake" id="intake-form">
          <label>Patient id <input id="patient-id" value="patient"></label>
          <div id="symptom-groups"></div>
          <fieldset id="history-fields"><legend>Prior episodes (count)</legend></fieldset>
          <div class="actions">
            <button type="submit" id="diagnose-btn">Diagnose</button>
            <button type="button" id="pin-btn" disabled>Pin as baseline</button>
          </div>
          <div id="form-errors" class="errors" role="alert"></div>
        </form>
        <div class="results">
          <section id="result">
            <h2 id="verdict"></h2>
            <div id="episodes"></div>
            <div id="warnings"></div>
            <div id="traces"></div>
          </section>
          <section id="delta"></section>
        </div>
      </div>`;

    const groups = this.root.querySelector("#symptom-groups") as HTMLElement;
    const vocabulary = this.program.vocabulary;
    const sections: [string, string[]][] = [
      ["Depressive symptoms", vocabulary.depressive_pole],
      ["Manic symptoms", vocabulary.manic_pole],
      ["Other findings", vocabulary.non_mood],
    ];
    for (const [title, names] of sections) {
      const fieldset = doc.createElement("fieldset");
      const legend = doc.createElement("legend");
      legend.textContent = `${title} (duration in weeks)`;
      fieldset.appendChild(legend);
      for (const name of names) {
        const label = doc.createElement("label");
        label.className = "symptom-row";
        const input = doc.createElement("input");
        input.type = "number";
        input.min = "0";
        input.step = "0.1";
        input.dataset.symptom = name;
        input.addEventListener("input", () => {
          this.form.symptoms.set(name, input.value);
          this.onEdit();
        });
        label.append(name.replaceAll("_", " "), input);
        fieldset.appendChild(label);
      }
      groups.appendChild(fieldset);
    }

    const historyFields = this.root.querySelector("#history-fields") as HTMLElement;
    for (const condition of vocabulary.history_conditions) {
      const label = doc.createElement("label");
      label.className = "history-row";
      const input = doc.createElement("input");
      input.type = "number";
      input.min = "0";
      input.step = "1";
      input.dataset.condition = condition;
      input.addEventListener("input", () => {
        this.form.history.set(condition, input.value);
        this.onEdit();
      });
      label.append(condition, input);
      historyFields.appendChild(label);
    }

    const idInput = this.root.querySelector("#patient-id") as HTMLInputElement;
    idInput.addEventListener("input", () => {
      this.form.patientId = idInput.value;
    });

    const form = this.root.querySelector("#intake-form") as HTMLFormElement;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      this.lastSubmit = this.submitNow();
    });
    const pin = this.root.querySelector("#pin-btn") as HTMLButtonElement;
    pin.addEventListener("click", () => this.pinBaseline());
  }

  // Editing after a baseline is pinned re-submits for the what-if view.
  private onEdit(): void {
    if (this.form.baseline !== null) {
      this.lastSubmit = this.submitNow();
    }
  }

  setSymptom(name: string, weeks: string): void {
    const input = this.root.querySelector(`input[data-symptom="${name}"]`) as HTMLInputElement;
    input.value = weeks;
    input.dispatchEvent(new Event("input", { bubbles: true }));
  }

  setHistory(condition: string, count: string): void {
    const input = this.root.querySelector(
      `input[data-condition="${condition}"]`,
    ) as HTMLInputElement;
    input.value = count;
    input.dispatchEvent(new Event("input", { bubbles: true }));
  }

  setPatientId(id: string): void {
    const input = this.root.querySelector("#patient-id") as HTMLInputElement;
    input.value = id;
    input.dispatchEvent(new Event("input", { bubbles: true }));
    this.form.patientId = id;
  }

  async submitNow(): Promise<void> {
    const errorsBox = this.root.querySelector("#form-errors") as HTMLElement;
    errorsBox.textContent = "";
    let request;
    try {
      request = buildDiagnoseRequest(this.form);
    } catch (error) {
      if (error instanceof FormInvalid) {
        errorsBox.textContent = error.errors.map((e) => e.message).join("; ");
        return;
      }
      throw error;
    }
    const mySeq = ++this.seq;
    const response = await this.client.diagnose(request);
    if (mySeq !== this.seq) {
      return; // superseded by a newer edit
    }
    this.form.latest = response;
    await this.renderDiagnosis(response);
    this.renderDelta();
    (this.root.querySelector("#pin-btn") as HTMLButtonElement).disabled = false;
  }

  pinBaseline(): void {
    if (this.form.latest !== null) {
      this.form.baseline = this.form.latest;
      this.renderDelta();
    }
  }

  async renderDiagnosis(response: DiagnoseResponse): Promise<void> {
    const verdict = this.root.querySelector("#verdict") as HTMLElement;
    verdict.textContent =
      response.disorders.length === 0
        ? NO_DIAGNOSIS
        : response.disorders.map((d) => this.displayName(d)).join(", ");

    const episodes = this.root.querySelector("#episodes") as HTMLElement;
    episodes.innerHTML = "";
    const active = Object.entries(response.episodes)
      .filter(([, flag]) => flag)
      .map(([name]) => name);
    if (active.length === 0) {
      episodes.textContent = "no current mood episode";
    } else {
      for (const name of active) {
        const badge = this.doc().createElement("span");
        badge.className = "badge";
        badge.dataset.episode = name;
        badge.textContent = `${name} episode`;
        episodes.appendChild(badge);
      }
    }

    const warnings = this.root.querySelector("#warnings") as HTMLElement;
    warnings.textContent = response.warnings.map((w) => w.message).join("; ");

    const traces = this.root.querySelector("#traces") as HTMLElement;
    traces.innerHTML = "";
    this.traces = {};
    for (const [disorder, explanationId] of Object.entries(response.explanations)) {
      const tree = await this.client.explainById(explanationId);
      this.traces[disorder] = tree;
      const heading = this.doc().createElement("h3");
      heading.textContent = `Why ${this.displayName(disorder)}?`;
      traces.appendChild(heading);
      traces.appendChild(renderTreeNode(tree, this.doc()));
    }
  }

  renderDelta(): void {
    const box = this.root.querySelector("#delta") as HTMLElement;
    box.innerHTML = "";
    const { baseline, latest } = this.form;
    if (baseline === null || latest === null) {
      return;
    }
    const heading = this.doc().createElement("h3");
    heading.textContent = "What-if vs baseline";
    box.appendChild(heading);
    const delta = compareToBaseline(baseline, latest);
    if (!delta.disorderChanged && delta.episodeChanges.length === 0) {
      const none = this.doc().createElement("p");
      none.id = "delta-empty";
      none.textContent = "no changes vs baseline";
      box.appendChild(none);
      return;
    }
    if (delta.disorderChanged) {
      const line = this.doc().createElement("p");
      line.id = "delta-disorder";
      const was = delta.baselineDisorders.map((d) => this.displayName(d)).join(", ") || NO_DIAGNOSIS;
      const now = delta.currentDisorders.map((d) => this.displayName(d)).join(", ") || NO_DIAGNOSIS;
      line.textContent = `diagnosis: ${was} → ${now}`;
      box.appendChild(line);
    }
    for (const change of delta.episodeChanges) {
      const line = this.doc().createElement("p");
      line.className = "delta-episode";
      line.textContent = `${change.name} episode: ${change.was ? "yes" : "no"} → ${change.now ? "yes" : "no"}`;
      box.appendChild(line);
    }
  }
}

export async function init(root: HTMLElement, client: CdssClient): Promise<App> {
  return App.create(root, client);
}
