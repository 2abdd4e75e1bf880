import { describe, expect, it } from "vitest";

import { parseProcessGraph, parseXml, quickDiagnostics,
         XmlSyntaxError } from "../src/bpmn.js";

const CHAIN = `<?xml version="1.0" encoding="UTF-8"?>
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"
             xmlns:ext="urn:flowgraft:ext" id="defs">
  <!-- a comment -->
  <process id="chain" name="Chain">
    <startEvent id="start"/>
    <serviceTask id="a" name="Task A" ext:service="alpha" ext:versionReq="1.x"/>
    <exclusiveGateway id="g" default="f3"/>
    <endEvent id="end"/>
    <endEvent id="end2"/>
    <sequenceFlow id="f1" sourceRef="start" targetRef="a"/>
    <sequenceFlow id="f2" sourceRef="a" targetRef="g"/>
    <sequenceFlow id="f3" sourceRef="g" targetRef="end"/>
    <sequenceFlow id="f4" sourceRef="g" targetRef="end2">
      <conditionExpression>total &gt; 10</conditionExpression>
    </sequenceFlow>
  </process>
</definitions>`;

describe("xml scanner", () => {
  it("parses elements, attributes, and text", () => {
    const root = parseXml('<a x="1"><b y="two">hi &amp; bye</b><c/></a>');
    expect(root.name).toBe("a");
    expect(root.attrs.x).toBe("1");
    expect(root.children.map((c) => c.name)).toEqual(["b", "c"]);
    expect(root.children[0].text).toBe("hi & bye");
  });

  it("strips namespace prefixes to local names", () => {
    const root = parseXml('<ns:defs xmlns:ns="urn:x"><ns:item ns:id="7"/></ns:defs>');
    expect(root.name).toBe("defs");
    expect(root.children[0].name).toBe("item");
    expect(root.children[0].attrs.id).toBe("7");
  });

  it("reports positions for malformed documents", () => {
    expect(() => parseXml("<a><b></a>")).toThrow(XmlSyntaxError);
    expect(() => parseXml("<a x=>")).toThrow(XmlSyntaxError);
    expect(() => parseXml("<a>")).toThrow(/unclosed/);
    try {
      parseXml("<a><b></a>");
    } catch (error) {
      expect((error as XmlSyntaxError).position).toBeGreaterThan(0);
    }
  });
});

describe("process graph extraction", () => {
  it("reads nodes, flows, conditions, and defaults", () => {
    const graph = parseProcessGraph(CHAIN);
    expect(graph.processId).toBe("chain");
    expect(graph.nodes.map((node) => node.kind)).toEqual([
      "StartEvent", "ServiceTask", "ExclusiveGateway", "EndEvent", "EndEvent"]);
    expect(graph.nodes[1].service).toBe("alpha");
    expect(graph.flows).toHaveLength(4);
    const conditioned = graph.flows.find((flow) => flow.id === "f4");
    expect(conditioned?.condition).toBe("total > 10");
    const fallback = graph.flows.find((flow) => flow.id === "f3");
    expect(fallback?.isDefault).toBe(true);
  });

  it("rejects documents without definitions or process", () => {
    expect(() => parseProcessGraph("<other/>")).toThrow(/definitions/);
    expect(() => parseProcessGraph("<definitions/>")).toThrow(/process/);
  });
});

describe("quick diagnostics mirror", () => {
  const graphOf = (body: string) =>
    parseProcessGraph(`<definitions><process id="p">${body}</process></definitions>`);

  it("clean document yields nothing", () => {
    expect(quickDiagnostics(parseProcessGraph(CHAIN))).toEqual([]);
  });

  it("flags missing start and end", () => {
    const none = quickDiagnostics(graphOf('<serviceTask id="t"/>'));
    expect(none.map((d) => d.code).sort()).toEqual(["NO_END", "NO_START"]);
  });

  it("flags multiple starts", () => {
    const diags = quickDiagnostics(graphOf(
      '<startEvent id="s1"/><startEvent id="s2"/><endEvent id="e"/>'));
    expect(diags.map((d) => d.code)).toEqual(["MULTIPLE_START"]);
    expect(diags[0].subjectId).toBe("s2");
  });

  it("flags duplicate ids across nodes and flows", () => {
    const diags = quickDiagnostics(graphOf(
      '<startEvent id="s"/><endEvent id="x"/>' +
      '<sequenceFlow id="x" sourceRef="s" targetRef="x"/>'));
    expect(diags.map((d) => d.code)).toEqual(["DUPLICATE_ID"]);
  });

  it("flags dangling references", () => {
    const diags = quickDiagnostics(graphOf(
      '<startEvent id="s"/><endEvent id="e"/>' +
      '<sequenceFlow id="f" sourceRef="s" targetRef="ghost"/>'));
    expect(diags.map((d) => d.code)).toEqual(["DANGLING_REF"]);
    expect(diags[0].subjectId).toBe("f");
  });
});
