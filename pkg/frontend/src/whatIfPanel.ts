import type { MbsProperties } from "./types.js";
import type { ViewModel } from "./state.js";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

/** Verdict badge: pass/fail plus the aggregate and its margin to threshold.
 * Every number is a field from the step response. */
export function renderVerdict(state: ViewModel): string {
  const verdict = state.lastVerdict;
  if (!verdict) return '<div class="verdict verdict-none">no evaluation yet</div>';
  const cls = verdict.verdict === "pass" ? "verdict-pass" : "verdict-fail";
  const aggregate =
    verdict.aggregate_in_db === null ? "no interference" : `${verdict.aggregate_in_db.toFixed(2)} dB`;
  const delta =
    verdict.delta_db === null
      ? ""
      : ` <span class="delta ${verdict.delta_db <= 0 ? "delta-ok" : "delta-bad"}">` +
        `${verdict.delta_db >= 0 ? "+" : ""}${verdict.delta_db.toFixed(2)} dB vs threshold</span>`;
  return (
    `<div class="verdict ${cls}" data-verdict="${verdict.verdict}">` +
    `${verdict.verdict.toUpperCase()} &mdash; aggregate ${aggregate}` +
    `${delta} &middot; ${verdict.active_count} active</div>`
  );
}

/** Weather toggle, zone-radius slider, per-station switches, and the two
 * action buttons. Pure markup from state; app.ts wires the events. */
export function renderPanel(state: ViewModel): string {
  const parts: string[] = ['<div class="panel-body">'];

  parts.push('<fieldset class="weather"><legend>weather</legend>');
  for (const weather of ["clear", "rainy"] as const) {
    const checked = state.selectedWeather === weather ? " checked" : "";
    parts.push(
      `<label><input type="radio" name="weather" value="${weather}"${checked}/> ${weather}</label>`,
    );
  }
  parts.push("</fieldset>");

  parts.push(
    '<fieldset class="zone"><legend>exclusion zone radius</legend>' +
      `<input id="ez-slider" type="range" min="500" max="5000" step="500" value="${state.proposedRadiusM}"/>` +
      `<output id="ez-value">${state.proposedRadiusM} m</output></fieldset>`,
  );

  parts.push('<fieldset class="stations"><legend>stations</legend><div class="station-list">');
  const features = state.map?.features ?? [];
  for (const feature of features) {
    if (feature.properties.kind !== "mbs") continue;
    const props = feature.properties as MbsProperties;
    const forced = state.proposedToggles[props.id];
    const effective = forced ?? props.active;
    const badge = props.active ? "" : ` <small>(${esc(props.revoked_reason ?? "off")})</small>`;
    parts.push(
      `<label class="station"><input type="checkbox" class="mbs-toggle" ` +
        `data-mbs-id="${esc(props.id)}"${effective ? " checked" : ""}/> ` +
        `${esc(props.id)}${badge}</label>`,
    );
  }
  parts.push("</div></fieldset>");

  const busy = state.evaluateInFlight ? " disabled" : "";
  parts.push(
    `<div class="actions"><button id="evaluate"${busy}>Evaluate</button>` +
      `<button id="run-loop"${busy}>Run loop</button>` +
      `<button id="reset-toggles"${busy}>Reset toggles</button></div>`,
  );
  parts.push(renderVerdict(state));

  if (state.history.length) {
    parts.push('<ol class="history">');
    for (const item of state.history.slice(-8)) {
      parts.push(
        `<li class="history-${item.verdict}">${esc(item.label)} &rarr; ${item.verdict}` +
          (item.aggregate === null ? "" : ` (${item.aggregate.toFixed(2)} dB)`) +
          "</li>",
      );
    }
    parts.push("</ol>");
  }
  parts.push("</div>");
  return parts.join("");
}

export function renderToast(state: ViewModel): string {
  if (!state.toast) return "";
  return `<div class="toast" role="alert">${esc(state.toast)}</div>`;
}
