import { afterEach, describe, expect, it, vi } from "vitest";

import { SsoaClient } from "../src/api.js";
import { RoundEditor, validateEdit, type CellEdit } from "../src/roundEditor.js";

const machining: CellEdit = {
  table: "machining_unit_cost",
  kind: "part_blue",
  index: 0,
  tier1: 1,
  value: 4200.5,
};

describe("client-side validation", () => {
  it("rejects negative prices before submission", () => {
    expect(validateEdit({ ...machining, value: -1 })).toMatch(/negative/);
  });

  it("requires tier2 on forging tables only", () => {
    expect(validateEdit({ ...machining, table: "forging_unit_cost" }))
      .toMatch(/tier2/);
    expect(validateEdit({ ...machining, tier2: 0 })).toMatch(/no tier2/);
    expect(validateEdit(machining)).toBeNull();
  });
});

function mockFetch(handler: (url: string, init?: RequestInit) => unknown) {
  return vi.fn(async (url: string, init?: RequestInit) => {
    const body = handler(url, init);
    if (body instanceof Response) return body;
    return new Response(JSON.stringify(body), { status: 200 });
  });
}

afterEach(() => vi.unstubAllGlobals());

describe("round editor flow", () => {
  it("stages, filters, and dedups by cell", () => {
    const editor = new RoundEditor(new SsoaClient("http://x"), "s1");
    editor.stage(machining);
    editor.stage({ ...machining, value: 4000 }); // same cell, new price
    editor.stage({ ...machining, tier1: 0 });
    expect(editor.staged()).toHaveLength(2);
    expect(editor.filterStaged({ tier1: 1 })[0].value).toBe(4000);
  });

  it("submits the delta then solves, clearing staged edits", async () => {
    const calls: string[] = [];
    vi.stubGlobal("fetch", mockFetch((url, init) => {
      calls.push(`${init?.method ?? "GET"} ${url}`);
      if (url.endsWith("/rounds")) return { number: 3 };
      return { status: "Optimal", objective: 7, allocation: null };
    }));
    const editor = new RoundEditor(new SsoaClient("http://x"), "s1");
    editor.stage(machining);
    const outcome = await editor.submitAndSolve("round three");
    expect(outcome.round).toBe(3);
    expect(outcome.report?.status).toBe("Optimal");
    expect(outcome.noChanges).toBe(false);
    expect(editor.isEmpty).toBe(true);
    expect(calls).toEqual([
      "POST http://x/v1/sessions/s1/rounds",
      "POST http://x/v1/sessions/s1/rounds/3/solve",
    ]);
  });

  it("flags an empty delta as a no-change round", async () => {
    vi.stubGlobal("fetch", mockFetch((url) =>
      url.endsWith("/rounds") ? { number: 1 }
        : { status: "Optimal", objective: 1, allocation: null }));
    const editor = new RoundEditor(new SsoaClient("http://x"), "s1");
    const outcome = await editor.submitAndSolve();
    expect(outcome.noChanges).toBe(true);
  });

  it("maps backend rejections to the offending cell", async () => {
    vi.stubGlobal("fetch", mockFetch(() =>
      new Response(JSON.stringify({ detail: "override 0: unknown part pB0" }),
                   { status: 422 })));
    const editor = new RoundEditor(new SsoaClient("http://x"), "s1");
    editor.stage(machining);
    const outcome = await editor.submitAndSolve();
    expect(outcome.report).toBeNull();
    expect(outcome.errors).toHaveLength(1);
    expect(outcome.errors[0].cell?.index).toBe(0);
    expect(outcome.errors[0].message).toMatch(/unknown part/);
  });
});
