// Wire payloads captured verbatim from a live service so the views are
// tested against exactly what the API sends.
//
// CONTEXT_SUGGEST / EMPTY_SUGGEST come from a log where citylocations
// dominates globally but watertemperature co-occurs with watersalinity:
// with the salinity context typed, the co-occurrence rule outranks the
// global favorite; with no context, the favorite leads.
//
// TRAIL_SESSIONS is one six-query refinement session: add a relation,
// loosen then tighten a constant, add two predicates.

import { SessionsResponse, SuggestResponse, SearchResponse } from "../src/api.js";

export const CONTEXT_SUGGEST: SuggestResponse = {
  completions: [
    { kind: "relation", name: "watertemperature", score: 0.8, tier: 1 },
    { kind: "relation", name: "citylocations", score: 0.6666666666666666, tier: 3 },
    { kind: "relation", name: "algaereports", score: 0.0, tier: 4 },
    { kind: "relation", name: "rainfall", score: 0.0, tier: 4 },
  ],
};

export const EMPTY_SUGGEST: SuggestResponse = {
  completions: [
    { kind: "relation", name: "citylocations", score: 0.6666666666666666, tier: 3 },
    { kind: "relation", name: "watersalinity", score: 0.3333333333333333, tier: 3 },
    { kind: "relation", name: "watertemperature", score: 0.26666666666666666, tier: 3 },
    { kind: "relation", name: "algaereports", score: 0.0, tier: 4 },
    { kind: "relation", name: "rainfall", score: 0.0, tier: 4 },
  ],
};

export const TRAIL_SESSIONS: SessionsResponse = {
  user: "ann",
  sessions: [
    {
      session_id: "ann:0",
      nodes: [
        {
          qid: "1",
          preview: "SELECT * FROM WaterTemperature WHERE temp > 20",
          raw_text: "SELECT * FROM WaterTemperature WHERE temp > 20",
          submitted_at: 10000,
        },
        {
          qid: "2",
          preview: "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 20",
          raw_text: "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 20",
          submitted_at: 70000,
        },
        {
          qid: "3",
          preview: "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 15",
          raw_text: "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 15",
          submitted_at: 130000,
        },
        {
          qid: "4",
          preview: "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 18",
          raw_text: "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 18",
          submitted_at: 190000,
        },
        {
          qid: "5",
          preview: "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 18 AND salinity < 2",
          raw_text: "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 18 AND salinity < 2",
          submitted_at: 250000,
        },
        {
          qid: "6",
          preview:
            "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 18 AND salinity < 2 AND WaterSalinity.lake = 'Lake Union'",
          raw_text:
            "SELECT * FROM WaterTemperature, WaterSalinity WHERE temp > 18 AND salinity < 2 AND WaterSalinity.lake = 'Lake Union'",
          submitted_at: 310000,
        },
      ],
      edges: [
        { from: "1", to: "2", type: "modification", labels: ["+ relation watersalinity"] },
        { from: "2", to: "3", type: "modification", labels: ["temp > 20 -> temp > 15"] },
        { from: "3", to: "4", type: "modification", labels: ["temp > 15 -> temp > 18"] },
        { from: "4", to: "5", type: "modification", labels: ["+ salinity < 2"] },
        { from: "5", to: "6", type: "modification", labels: ["+ lake = 'Lake Union'"] },
      ],
    },
  ],
};

export const PARTIAL_SEARCH: SearchResponse = {
  results: [
    {
      qid: "2",
      score: 1.0,
      certainty: "definite",
      preview: "SELECT t.lake FROM WaterTemperature t, WaterSalinity s WHERE t.lake = s.lake AND t.temp > 15",
      owner: "ann",
      validity: "valid",
      cluster: "2",
    },
    {
      qid: "3",
      score: 1.0,
      certainty: "definite",
      preview: "SELECT t.lake FROM WaterTemperature t, WaterSalinity s WHERE t.lake = s.lake AND t.temp > 18",
      owner: "ann",
      validity: "valid",
      cluster: "2",
    },
  ],
};

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
