export interface VideoManifest {
  video_id: string;
  level: string;
  frame_count: number;
  frame_duration_ms: number;
  duration_ms: number;
  frames: string[];
}

export type ActorChoice = "human" | "animal" | "unknown";

export type ActionChoice =
  | "climbing"
  | "crawling"
  | "eating"
  | "flying"
  | "jumping"
  | "running"
  | "spinning"
  | "walking"
  | "unknown";

export const ACTIONS: ActionChoice[] = [
  "climbing",
  "crawling",
  "eating",
  "flying",
  "jumping",
  "running",
  "spinning",
  "walking",
];

export interface AnswerRecord {
  participant_id: string;
  video_id: string;
  level: string;
  actor_choice: ActorChoice;
  action_choice: ActionChoice;
  response_time_ms: number;
  watched_full: boolean;
}
