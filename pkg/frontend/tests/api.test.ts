import { describe, expect, it } from "vitest";

import { StudyApi } from "../src/api.js";
import { AnswerRecord } from "../src/types.js";

const RECORD: AnswerRecord = {
  participant_id: "p1",
  video_id: "v1",
  level: "fine",
  actor_choice: "human",
  action_choice: "walking",
  response_time_ms: 1234,
  watched_full: false,
};

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("submitAnswer", () => {
  it("sends a stable idempotency key", async () => {
    const bodies: string[] = [];
    const api = new StudyApi("", async (_url, init) => {
      bodies.push(init!.body as string);
      return jsonResponse({ record_id: 1, duplicate: false });
    }, 1);
    await api.submitAnswer(RECORD);
    expect(JSON.parse(bodies[0]).idempotency_key).toBe("p1:v1");
  });

  it("retries a network failure with the same body", async () => {
    const bodies: string[] = [];
    let calls = 0;
    const api = new StudyApi("", async (_url, init) => {
      calls++;
      bodies.push(init!.body as string);
      if (calls === 1) throw new TypeError("network down");
      return jsonResponse({ record_id: 7, duplicate: true });
    }, 1);
    const out = await api.submitAnswer(RECORD);
    expect(out.record_id).toBe(7);
    expect(calls).toBe(2);
    expect(bodies[0]).toBe(bodies[1]);
  });

  it("does not retry a 409 rejection", async () => {
    let calls = 0;
    const api = new StudyApi("", async () => {
      calls++;
      return new Response("already answered", { status: 409 });
    }, 1);
    await expect(api.submitAnswer(RECORD)).rejects.toThrow(/rejected/);
    expect(calls).toBe(1);
  });

  it("gives up after exhausting attempts", async () => {
    const api = new StudyApi("", async () => {
      throw new TypeError("network down");
    }, 1, 2);
    await expect(api.submitAnswer(RECORD)).rejects.toThrow(/network down/);
  });
});

describe("nextVideo", () => {
  it("parses the done flag", async () => {
    const api = new StudyApi("", async () => jsonResponse({ done: true }));
    const nxt = await api.nextVideo("p1");
    expect(nxt.done).toBe(true);
  });
});
