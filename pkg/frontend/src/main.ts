/**
 * Participant interface: supervoxel video on the left, forced-choice
 * buttons on the right. Space starts the video and the response timer;
 * a second space (or the video ending) stops both and activates the
 * buttons. Videos are fully preloaded before the ready prompt so network
 * jitter never pollutes response times, and each is watchable only once.
 */

import { StudyApi } from "./api.js";
import { decodePpm, DecodedFrame } from "./ppm.js";
import { FramePlayer, realScheduler } from "./player.js";
import { Event as UiEvent, initialState, transition, SessionViewState, Effect } from "./stateMachine.js";
import { ACTIONS, VideoManifest } from "./types.js";

const params = new URLSearchParams(window.location.search);
const participantId = params.get("participant") ?? `anon-${Date.now()}`;
const split = params.get("split") ?? "alpha";
const seed = Number(params.get("seed") ?? Math.floor(Math.random() * 1e9));

const api = new StudyApi("");
const canvas = document.getElementById("video") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusEl = document.getElementById("status")!;
const progressEl = document.getElementById("progress")!;

let state: SessionViewState = initialState(participantId);
let frames: DecodedFrame[] = [];
let player: FramePlayer | null = null;

const actorButtons = new Map<string, HTMLButtonElement>();
const actionButtons = new Map<string, HTMLButtonElement>();
let unknownButton: HTMLButtonElement;
let confirmButton: HTMLButtonElement;

function buildButtons(): void {
  const actorBox = document.getElementById("actor-buttons")!;
  for (const actor of ["human", "animal"] as const) {
    const b = document.createElement("button");
    b.textContent = actor;
    b.onclick = () => dispatch({ kind: "selectActor", actor });
    actorBox.appendChild(b);
    actorButtons.set(actor, b);
  }
  const actionBox = document.getElementById("action-buttons")!;
  for (const action of ACTIONS) {
    const b = document.createElement("button");
    b.textContent = action;
    b.onclick = () => dispatch({ kind: "selectAction", action: action as never });
    actionBox.appendChild(b);
    actionButtons.set(action, b);
  }
  unknownButton = document.getElementById("unknown-button") as HTMLButtonElement;
  unknownButton.onclick = () => dispatch({ kind: "selectUnknown" });
  confirmButton = document.getElementById("confirm-button") as HTMLButtonElement;
  confirmButton.onclick = () => dispatch({ kind: "confirm" });
}

function renderFrame(index: number): void {
  const frame = frames[index];
  if (!frame) return;
  canvas.width = frame.width;
  canvas.height = frame.height;
  ctx.putImageData(new ImageData(frame.rgba, frame.width, frame.height), 0, 0);
}

function syncUi(): void {
  const enabled = state.buttonsEnabled;
  for (const [name, b] of actorButtons) {
    b.disabled = !enabled;
    b.classList.toggle("selected", state.actorChoice === name);
  }
  for (const [name, b] of actionButtons) {
    b.disabled = !enabled;
    b.classList.toggle("selected", state.actionChoice === name);
  }
  unknownButton.disabled = !enabled;
  unknownButton.classList.toggle(
    "selected", state.actorChoice === "unknown" && state.actionChoice === "unknown");
  confirmButton.disabled = !enabled ||
    !(state.actorChoice !== null && state.actionChoice !== null);
  progressEl.textContent = state.total ? `${state.position + 1} / ${state.total}` : "";
  statusEl.textContent = {
    idle: "loading...",
    ready: "ready - press SPACE to start",
    playing: "press SPACE as soon as you know the actor and action",
    answering: "select the actor and action, then confirm",
    done: "session complete - thank you",
  }[state.phase];
  if (state.phase !== "playing" && state.phase !== "answering") {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
  }
}

function runEffects(effects: Effect[]): void {
  for (const effect of effects) {
    switch (effect.kind) {
      case "startPlayback":
        player = new FramePlayer(
          effect.manifest.frame_count,
          effect.manifest.frame_duration_ms,
          { show: renderFrame, clear: () => ctx.clearRect(0, 0, canvas.width, canvas.height) },
          realScheduler,
          (at) => dispatch({ kind: "videoEnded", at }),
        );
        player.start();
        break;
      case "stopPlayback":
        player?.stop();
        player = null;
        break;
      case "submit":
        void api.submitAnswer(effect.record).catch((err) => {
          statusEl.textContent = `submission failed: ${err}`;
        });
        break;
      case "requestNext":
        void loadNext();
        break;
    }
  }
}

function dispatch(event: UiEvent): void {
  const result = transition(state, event);
  state = result.state;
  runEffects(result.effects);
  syncUi();
}

async function loadNext(): Promise<void> {
  const nxt = await api.nextVideo(participantId);
  if (nxt.done) {
    dispatch({ kind: "sessionComplete" });
    return;
  }
  const manifest = nxt.manifest as VideoManifest;
  frames = [];
  for (const url of manifest.frames) {
    frames.push(decodePpm(await api.fetchFrame(url)));
  }
  dispatch({ kind: "videoReady", manifest, position: nxt.position!, total: nxt.total! });
}

async function start(): Promise<void> {
  buildButtons();
  document.addEventListener("keydown", (e) => {
    if (e.code === "Space") {
      e.preventDefault();
      dispatch({ kind: "spaceKey", at: performance.now() });
    }
  });
  syncUi();
  try {
    await api.startSession(participantId, split, seed);
  } catch {
    statusEl.textContent = "resuming existing session";
  }
  await loadNext();
}

void start();
