/**
 * Trial state machine for one participant session.
 *
 * Phases: idle (loading/preloading) -> ready (video downloaded, prompt
 * shown) -> playing (first space press started the timer) -> answering
 * (second space press or video end stopped it; buttons active) -> idle ...
 * -> done.
 *
 * The response time runs between the two space presses, or to the video's
 * end, whichever comes first. Buttons are enabled only while answering.
 * There is no transition from answering back to playing, so a video can
 * never be replayed.
 *
 * Events carry monotonic-clock timestamps supplied by the host. The host
 * delivers events in timestamp order; on an exact tie between a space
 * press and the video-end event, the space press is delivered first and
 * therefore wins.
 */

import { ActionChoice, ActorChoice, AnswerRecord, VideoManifest } from "./types.js";

export type Phase = "idle" | "ready" | "playing" | "answering" | "done";

export interface SessionViewState {
  phase: Phase;
  participantId: string;
  manifest: VideoManifest | null;
  timerStartMs: number | null;
  responseTimeMs: number | null;
  watchedFull: boolean;
  buttonsEnabled: boolean;
  actorChoice: ActorChoice | null;
  actionChoice: ActionChoice | null;
  position: number;
  total: number;
  /** Ids of videos whose playback has started; replay offers are refused. */
  playedVideoIds: readonly string[];
}

export type Event =
  | { kind: "videoReady"; manifest: VideoManifest; position: number; total: number }
  | { kind: "spaceKey"; at: number }
  | { kind: "videoEnded"; at: number }
  | { kind: "selectActor"; actor: Exclude<ActorChoice, "unknown"> }
  | { kind: "selectAction"; action: Exclude<ActionChoice, "unknown"> }
  | { kind: "selectUnknown" }
  | { kind: "confirm" }
  | { kind: "sessionComplete" };

export type Effect =
  | { kind: "startPlayback"; manifest: VideoManifest }
  | { kind: "stopPlayback" }
  | { kind: "submit"; record: AnswerRecord }
  | { kind: "requestNext" };

export interface Transition {
  state: SessionViewState;
  effects: Effect[];
}

export function initialState(participantId: string): SessionViewState {
  return {
    phase: "idle",
    participantId,
    manifest: null,
    timerStartMs: null,
    responseTimeMs: null,
    watchedFull: false,
    buttonsEnabled: false,
    actorChoice: null,
    actionChoice: null,
    position: 0,
    total: 0,
    playedVideoIds: [],
  };
}

function unchanged(state: SessionViewState): Transition {
  return { state, effects: [] };
}

export function transition(state: SessionViewState, event: Event): Transition {
  switch (event.kind) {
    case "videoReady":
      if (state.phase !== "idle") return unchanged(state);
      if (state.playedVideoIds.includes(event.manifest.video_id)) {
        return unchanged(state); // each video is watchable only once
      }
      return {
        state: {
          ...state,
          phase: "ready",
          manifest: event.manifest,
          position: event.position,
          total: event.total,
          timerStartMs: null,
          responseTimeMs: null,
          watchedFull: false,
          buttonsEnabled: false,
          actorChoice: null,
          actionChoice: null,
        },
        effects: [],
      };

    case "spaceKey":
      if (state.phase === "ready") {
        return {
          state: {
            ...state,
            phase: "playing",
            timerStartMs: event.at,
            playedVideoIds: [...state.playedVideoIds, state.manifest!.video_id],
          },
          effects: [{ kind: "startPlayback", manifest: state.manifest! }],
        };
      }
      if (state.phase === "playing") {
        return {
          state: {
            ...state,
            phase: "answering",
            responseTimeMs: event.at - state.timerStartMs!,
            watchedFull: false,
            buttonsEnabled: true,
          },
          effects: [{ kind: "stopPlayback" }],
        };
      }
      return unchanged(state);

    case "videoEnded":
      if (state.phase !== "playing") return unchanged(state);
      return {
        state: {
          ...state,
          phase: "answering",
          // The participant watched the whole video: the full video time
          // (manifest duration at half frame rate) is the response time.
          responseTimeMs: state.manifest!.duration_ms,
          watchedFull: true,
          buttonsEnabled: true,
        },
        effects: [{ kind: "stopPlayback" }],
      };

    case "selectActor":
      if (state.phase !== "answering") return unchanged(state);
      return unchanged({ ...state, actorChoice: event.actor });

    case "selectAction":
      if (state.phase !== "answering") return unchanged(state);
      return unchanged({ ...state, actionChoice: event.action });

    case "selectUnknown":
      if (state.phase !== "answering") return unchanged(state);
      return unchanged({ ...state, actorChoice: "unknown", actionChoice: "unknown" });

    case "confirm": {
      if (state.phase !== "answering") return unchanged(state);
      if (!choicesComplete(state)) return unchanged(state);
      const record: AnswerRecord = {
        participant_id: state.participantId,
        video_id: state.manifest!.video_id,
        level: state.manifest!.level,
        actor_choice: state.actorChoice!,
        action_choice: state.actionChoice!,
        response_time_ms: state.responseTimeMs!,
        watched_full: state.watchedFull,
      };
      return {
        state: {
          ...state,
          phase: "idle",
          manifest: null,
          timerStartMs: null,
          responseTimeMs: null,
          watchedFull: false,
          buttonsEnabled: false,
          actorChoice: null,
          actionChoice: null,
        },
        effects: [{ kind: "submit", record }, { kind: "requestNext" }],
      };
    }

    case "sessionComplete":
      if (state.phase !== "idle") return unchanged(state);
      return unchanged({ ...state, phase: "done" });
  }
}

/** Both choices set, or the joint unknown selected. */
export function choicesComplete(state: SessionViewState): boolean {
  if (state.actorChoice === "unknown" || state.actionChoice === "unknown") {
    return state.actorChoice === "unknown" && state.actionChoice === "unknown";
  }
  return state.actorChoice !== null && state.actionChoice !== null;
}
