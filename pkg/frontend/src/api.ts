/**
 * Client for the study-service endpoints. Answer submission carries an
 * idempotency key derived from (participant, video), so retries after a
 * network failure can never store a duplicate record.
 */

import { AnswerRecord, VideoManifest } from "./types.js";

export interface NextVideo {
  done: boolean;
  ready_token?: string;
  position?: number;
  total?: number;
  manifest?: VideoManifest;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class StudyApi {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
    private retryDelayMs = 400,
    private maxAttempts = 4,
  ) {}

  async startSession(participantId: string, split: string, seed: number): Promise<{ total: number }> {
    const r = await this.fetchImpl(`${this.baseUrl}/session/start`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ participant_id: participantId, split, seed }),
    });
    if (!r.ok) throw new Error(`start failed: ${r.status}`);
    return r.json();
  }

  async nextVideo(participantId: string): Promise<NextVideo> {
    const r = await this.fetchImpl(
      `${this.baseUrl}/session/next?participant=${encodeURIComponent(participantId)}`);
    if (!r.ok) throw new Error(`next failed: ${r.status}`);
    return r.json();
  }

  async fetchFrame(url: string): Promise<Uint8Array> {
    const r = await this.fetchImpl(`${this.baseUrl}${url}`);
    if (!r.ok) throw new Error(`frame fetch failed: ${r.status}`);
    return new Uint8Array(await r.arrayBuffer());
  }

  async submitAnswer(record: AnswerRecord): Promise<{ record_id: number }> {
    const body = JSON.stringify({
      ...record,
      idempotency_key: `${record.participant_id}:${record.video_id}`,
    });
    let lastError: unknown = null;
    for (let attempt = 0; attempt < this.maxAttempts; attempt++) {
      try {
        const r = await this.fetchImpl(`${this.baseUrl}/session/answer`, {
          method: "POST",
          headers: { "content-type": "application/json" },
          body,
        });
        if (r.ok) return r.json();
        if (r.status === 409) throw new Error(`rejected: ${await r.text()}`);
        lastError = new Error(`submit failed: ${r.status}`);
      } catch (err) {
        if (err instanceof Error && err.message.startsWith("rejected:")) throw err;
        lastError = err;
      }
      await delay(this.retryDelayMs * (attempt + 1));
    }
    throw lastError instanceof Error ? lastError : new Error(String(lastError));
  }
}

function delay(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
