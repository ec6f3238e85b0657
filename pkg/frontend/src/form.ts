// Form state and its one-to-one mapping onto DiagnoseRequest.

import type { DiagnoseRequest, DiagnoseResponse } from "./api";

export interface FormState {
  patientId: string;
  // symptom -> duration in weeks as typed by the clinician ("" = unselected)
  symptoms: Map<string, string>;
  // history condition -> episode count as typed ("" or "0" = none)
  history: Map<string, string>;
  baseline: DiagnoseResponse | null;
  latest: DiagnoseResponse | null;
}

export interface FieldError {
  field: string;
  message: string;
}

export function emptyForm(): FormState {
  return {
    patientId: "patient",
    symptoms: new Map(),
    history: new Map(),
    baseline: null,
    latest: null,
  };
}

export function validateForm(form: FormState): FieldError[] {
  const errors: FieldError[] = [];
  for (const [symptom, raw] of form.symptoms) {
    if (raw.trim() === "") continue;
    const weeks = Number(raw);
    if (!Number.isFinite(weeks)) {
      errors.push({ field: symptom, message: `duration for ${symptom} must be a number` });
    } else if (weeks < 0) {
      errors.push({ field: symptom, message: `duration for ${symptom} must be non-negative` });
    }
  }
  for (const [condition, raw] of form.history) {
    if (raw.trim() === "") continue;
    const count = Number(raw);
    if (!Number.isInteger(count)) {
      errors.push({ field: condition, message: `count for ${condition} must be a whole number` });
    } else if (count < 0) {
      errors.push({ field: condition, message: `count for ${condition} must be non-negative` });
    }
  }
  return errors;
}

export class FormInvalid extends Error {
  constructor(readonly errors: FieldError[]) {
    super(errors.map((e) => e.message).join("; "));
  }
}

export function buildDiagnoseRequest(form: FormState): DiagnoseRequest {
  const errors = validateForm(form);
  if (errors.length > 0) {
    throw new FormInvalid(errors);
  }
  const observed = [];
  for (const [symptom, raw] of form.symptoms) {
    if (raw.trim() === "") continue;
    observed.push({ symptom, weeks: Number(raw) });
  }
  const history = [];
  for (const [condition, raw] of form.history) {
    if (raw.trim() === "") continue;
    const count = Number(raw);
    if (count === 0) continue; // no prior episodes: no fact
    history.push({ condition, count });
  }
  return { id: form.patientId || "patient", observed, history };
}

export interface Delta {
  disorderChanged: boolean;
  baselineDisorders: string[];
  currentDisorders: string[];
  episodeChanges: { name: string; was: boolean; now: boolean }[];
}

export function compareToBaseline(baseline: DiagnoseResponse, current: DiagnoseResponse): Delta {
  const episodeChanges = [];
  const names = new Set([...Object.keys(baseline.episodes), ...Object.keys(current.episodes)]);
  for (const name of [...names].sort()) {
    const was = Boolean(baseline.episodes[name]);
    const now = Boolean(current.episodes[name]);
    if (was !== now) {
      episodeChanges.push({ name, was, now });
    }
  }
  const same =
    baseline.disorders.length === current.disorders.length &&
    baseline.disorders.every((d, i) => current.disorders[i] === d);
  return {
    disorderChanged: !same,
    baselineDisorders: [...baseline.disorders],
    currentDisorders: [...current.disorders],
    episodeChanges,
  };
}
