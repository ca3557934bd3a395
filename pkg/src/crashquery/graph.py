"""Frame-to-DAG compilation: typed operation nodes with explicit data dependencies.

Node kinds and their stream types:

    entity_load(entity, role)            [] -> stream(role)
    attribute_filter(constraint)         [stream(r)] -> stream(r)
    scope_constraint(scope_role, r)      [stream(r), stream(scope)] -> stream(r)
    spatial_match(constraint)            [stream(target), stream(ref)] -> stream(target)
    relation_snap(link)                  [stream(from), stream(to)] -> snap
    aggregate(metric, attribution)       [stream(primary), stream(support), snap?] -> counts
    rank(ranking)                        [counts] -> ranking
    role_materialize                     [stream...] -> bundle
    output_map / output_table / output_summary   terminals

The compiler derives the topology from a validated frame only; structural
checks (existing inputs, acyclicity, output terminals, edge types) run
before anything touches data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .frames import SemanticFrame
from .registry import PLACE_ENTITY, SchemaRegistry

ROLE_ORDER = ("primary", "support", "scope", "anchor", "filter")

OUTPUT_KINDS = ("output_map", "output_table", "output_summary")

DEFAULT_SNAP_TOLERANCE_M = 20.0


class CompileError(ValueError):
    """Frame violates role semantics that schema validation cannot see."""


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    params: dict
    inputs: tuple[str, ...] = ()


@dataclass
class ExecGraph:
    nodes: dict[str, Node] = field(default_factory=dict)
    outputs: tuple[str, ...] = ()

    def add(self, kind: str, params: dict, inputs: tuple[str, ...] = ()) -> str:
        node_id = f"n{len(self.nodes) + 1:02d}_{kind}"
        self.nodes[node_id] = Node(node_id, kind, params, inputs)
        return node_id

    def node_list(self) -> list[Node]:
        return list(self.nodes.values())

    def to_obj(self) -> dict:
        return {
            "nodes": [
                {"id": n.id, "kind": n.kind, "params": n.params, "inputs": list(n.inputs)}
                for n in self.nodes.values()
            ],
            "outputs": list(self.outputs),
        }


# ---------------------------------------------------------------------------
# compilation

def compile_frame(frame: SemanticFrame, registry: SchemaRegistry) -> ExecGraph:
    """Compile a validated frame; raises CompileError on role-semantic faults."""
    if not frame.supported:
        raise CompileError("unsupported frames do not compile")
    if frame.target_for_role("primary") is None:
        raise CompileError("frame has no primary target")

    g = ExecGraph()
    role_entity = {t.role: t.entity for t in frame.targets}
    head: dict[str, str] = {}

    # one entity_load per target, in fixed role order
    for role in ROLE_ORDER:
        target = frame.target_for_role(role)
        if target is None:
            continue
        params: dict = {"entity": target.entity, "role": role}
        refs = frame.references_for_role(role)
        if role == "scope":
            params["names"] = sorted(r.name for r in refs)
        if role == "anchor":
            anchors = []
            for r in refs:
                if r.resolved_location is None:
                    raise CompileError(f"anchor reference {r.name!r} is unresolved")
                anchors.append({"name": r.name, "location": list(r.resolved_location)})
            params["anchors"] = sorted(anchors, key=lambda a: (a["name"], a["location"]))
        head[role] = g.add("entity_load", params)

    # attribute filters pushed against their role's load
    for c in sorted(frame.attribute_constraints,
                    key=lambda c: (c.target_role, c.field, c.operator, repr(c.value))):
        if c.target_role not in head:
            raise CompileError(f"attribute constraint on untargeted role {c.target_role!r}")
        head[c.target_role] = g.add(
            "attribute_filter",
            {"role": c.target_role, "field": c.field, "operator": c.operator,
             "value": _plain(c.value)},
            (head[c.target_role],),
        )

    # scope stage: every non-scope stream is clipped to the scope geometry
    if "scope" in head:
        scope_node = head["scope"]
        for role in ROLE_ORDER:
            if role == "scope" or role not in head:
                continue
            if role == "anchor":
                continue  # anchors are verified coordinates, not scoped streams
            head[role] = g.add(
                "scope_constraint",
                {"scope_role": "scope", "role": role},
                (head[role], scope_node),
            )

    # spatial matches restrict their target_role stream
    ranking_link = _ranking_constraint(frame)
    for c in sorted(frame.spatial_constraints,
                    key=lambda c: (c.relation, c.target_role, c.reference_role, repr(c.distance_m))):
        for role in (c.target_role, c.reference_role):
            if role not in head:
                raise CompileError(f"spatial constraint on untargeted role {role!r}")
        params = {"relation": c.relation, "target_role": c.target_role,
                  "reference_role": c.reference_role}
        if c.distance_m is not None:
            params["distance_m"] = float(c.distance_m)
        head[c.target_role] = g.add(
            "spatial_match", params, (head[c.target_role], head[c.reference_role]),
        )

    # explicit snap links
    snap_node: str | None = None
    for link in frame.relations:
        for role in (link.from_role, link.to_role):
            if role not in head:
                raise CompileError(f"relation link on untargeted role {role!r}")
        snap_node = g.add(
            "relation_snap",
            {"kind": link.kind, "from_role": link.from_role, "to_role": link.to_role,
             "tolerance_m": float(link.tolerance_m), "implicit": False},
            (head[link.from_role], head[link.to_role]),
        )

    # aggregation + ranking
    rank_node: str | None = None
    if frame.ranking is not None:
        rk = frame.ranking
        if "support" not in head:
            raise CompileError("ranking needs a support target to count")
        if rk.target_role not in head:
            raise CompileError(f"ranking targets missing role {rk.target_role!r}")
        primary_entity = role_entity[rk.target_role]
        spec = registry.entity(primary_entity)
        geometry_kind = spec.geometry_kind if spec else "point"

        agg_params: dict = {"metric": rk.metric, "primary_role": rk.target_role,
                            "support_role": "support"}
        agg_inputs = [head[rk.target_role], head["support"]]
        if ranking_link is not None:
            if ranking_link.relation == "nearest_to":
                raise CompileError("nearest_to cannot drive a ranking count")
            agg_params["attribution"] = "constraint"
            agg_params["relation"] = ranking_link.relation
            if ranking_link.distance_m is not None:
                agg_params["distance_m"] = float(ranking_link.distance_m)
            agg_params["direction"] = (
                "support_to_primary" if ranking_link.target_role == "support"
                else "primary_to_support"
            )
        elif snap_node is not None and geometry_kind == "polyline":
            agg_params["attribution"] = "snap"
            agg_inputs.append(snap_node)
        elif geometry_kind == "polyline":
            # implicit snap: crash-to-segment assignment with default tolerance
            support_entity = role_entity["support"]
            support_spec = registry.entity(support_entity)
            if support_spec is None or support_spec.geometry_kind != "point":
                raise CompileError("snap attribution needs a point support entity")
            snap_node = g.add(
                "relation_snap",
                {"kind": "snap_to_road", "from_role": "support", "to_role": rk.target_role,
                 "tolerance_m": DEFAULT_SNAP_TOLERANCE_M, "implicit": True},
                (head["support"], head[rk.target_role]),
            )
            agg_params["attribution"] = "snap"
            agg_inputs.append(snap_node)
        elif geometry_kind == "polygon":
            agg_params["attribution"] = "containment"
        else:
            raise CompileError(
                f"ranking a point entity ({primary_entity}) needs a spatial constraint "
                "linking support to primary"
            )
        agg = g.add("aggregate", agg_params, tuple(agg_inputs))
        rank_node = g.add(
            "rank",
            {"metric": rk.metric, "target_role": rk.target_role,
             "order": rk.order, "top_n": rk.top_n},
            (agg,),
        )

    # converge streams and emit terminals
    mat_inputs = tuple(head[role] for role in ROLE_ORDER if role in head)
    mat_params = {"roles": [role for role in ROLE_ORDER if role in head]}
    mat = g.add("role_materialize", mat_params, mat_inputs)

    outputs = [g.add("output_map", {}, (mat,))]
    if rank_node is not None:
        outputs.append(g.add("output_table", {}, (mat, rank_node)))
    outputs.append(g.add("output_summary", {}, (mat,)))
    g.outputs = tuple(outputs)
    return g


def _ranking_constraint(frame: SemanticFrame):
    """The spatial constraint that links support and primary, if any."""
    if frame.ranking is None:
        return None
    pr = frame.ranking.target_role
    for c in sorted(frame.spatial_constraints,
                    key=lambda c: (c.relation, c.target_role, c.reference_role)):
        if {c.target_role, c.reference_role} == {"support", pr}:
            return c
    return None


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


# ---------------------------------------------------------------------------
# structural checks

def check_graph(graph: ExecGraph) -> list[str]:
    """All structural faults: missing inputs, cycles, bad terminals, edge types."""
    faults: list[str] = []
    nodes = graph.nodes

    for node in nodes.values():
        for inp in node.inputs:
            if inp not in nodes:
                faults.append(f"{node.id}: input {inp!r} does not exist")

    # acyclicity via iterative DFS with colors
    color: dict[str, int] = {}
    for start in nodes:
        if color.get(start):
            continue
        stack = [(start, iter(nodes[start].inputs))]
        color[start] = 1
        while stack:
            nid, it = stack[-1]
            advanced = False
            for nxt in it:
                if nxt not in nodes:
                    continue
                c = color.get(nxt, 0)
                if c == 1:
                    faults.append(f"{nid}: dependency cycle through {nxt}")
                elif c == 0:
                    color[nxt] = 1
                    stack.append((nxt, iter(nodes[nxt].inputs)))
                    advanced = True
                    break
            if not advanced:
                color[nid] = 2
                stack.pop()

    # terminals: declared outputs and actual sinks must be output_* kinds
    consumed = {inp for n in nodes.values() for inp in n.inputs}
    for out in graph.outputs:
        if out not in nodes:
            faults.append(f"declared output {out!r} does not exist")
        elif nodes[out].kind not in OUTPUT_KINDS:
            faults.append(f"{out}: terminal kind {nodes[out].kind!r} is not an output operation")
    for node in nodes.values():
        if node.id not in consumed and node.kind not in OUTPUT_KINDS:
            faults.append(f"{node.id}: sink node of kind {node.kind!r} is not an output operation")
        if node.kind in OUTPUT_KINDS and node.id not in graph.outputs:
            faults.append(f"{node.id}: output node not declared in graph outputs")

    if not any("cycle" in f for f in faults):
        faults.extend(_check_types(graph))
    return faults


def _stream_type(node: Node, types: dict[str, tuple]) -> tuple:
    """Output type of a node given its inputs' types; ('invalid',) on mismatch."""
    kind = node.kind
    ins = [types.get(i, ("missing",)) for i in node.inputs]

    def stream(role):
        return ("stream", role)

    if kind == "entity_load":
        if ins:
            return ("invalid", "entity_load takes no inputs")
        return stream(node.params.get("role"))
    if kind == "attribute_filter":
        want = stream(node.params.get("role"))
        if len(ins) != 1 or ins[0] != want:
            return ("invalid", f"attribute_filter expects [{want}], got {ins}")
        return want
    if kind == "scope_constraint":
        want = stream(node.params.get("role"))
        scope = stream(node.params.get("scope_role"))
        if len(ins) != 2 or ins[0] != want or ins[1] != scope:
            return ("invalid", f"scope_constraint expects [{want}, {scope}], got {ins}")
        return want
    if kind == "spatial_match":
        want = stream(node.params.get("target_role"))
        ref = stream(node.params.get("reference_role"))
        if len(ins) != 2 or ins[0] != want or ins[1] != ref:
            return ("invalid", f"spatial_match expects [{want}, {ref}], got {ins}")
        return want
    if kind == "relation_snap":
        want = stream(node.params.get("from_role"))
        to = stream(node.params.get("to_role"))
        if len(ins) != 2 or ins[0] != want or ins[1] != to:
            return ("invalid", f"relation_snap expects [{want}, {to}], got {ins}")
        return ("snap",)
    if kind == "aggregate":
        want = [stream(node.params.get("primary_role")), stream(node.params.get("support_role"))]
        if node.params.get("attribution") == "snap":
            want.append(("snap",))
        if ins != want:
            return ("invalid", f"aggregate expects {want}, got {ins}")
        return ("counts",)
    if kind == "rank":
        if ins != [("counts",)]:
            return ("invalid", f"rank expects [counts], got {ins}")
        return ("ranking",)
    if kind == "role_materialize":
        if not ins or any(t[0] != "stream" for t in ins):
            return ("invalid", f"role_materialize expects role streams, got {ins}")
        roles = [t[1] for t in ins]
        if len(set(roles)) != len(roles):
            return ("invalid", "role_materialize got duplicate role streams")
        return ("bundle",)
    if kind == "output_map" or kind == "output_summary":
        if len(ins) != 1 or ins[0] != ("bundle",):
            return ("invalid", f"{kind} expects [bundle], got {ins}")
        return ("output",)
    if kind == "output_table":
        if ins != [("bundle",), ("ranking",)]:
            return ("invalid", f"output_table expects [bundle, ranking], got {ins}")
        return ("output",)
    return ("invalid", f"unknown node kind {kind!r}")


def _check_types(graph: ExecGraph) -> list[str]:
    faults = []
    types: dict[str, tuple] = {}
    try:
        order = topo_order(graph)
    except ValueError:
        return []
    for nid in order:
        node = graph.nodes[nid]
        t = _stream_type(node, types)
        types[nid] = t
        if t[0] == "invalid":
            faults.append(f"{nid}: {t[1]}")
    return faults


def topo_order(graph: ExecGraph) -> list[str]:
    """Deterministic topological order; ties broken by node id."""
    indeg = {nid: 0 for nid in graph.nodes}
    dependents: dict[str, list[str]] = {nid: [] for nid in graph.nodes}
    for node in graph.nodes.values():
        for inp in node.inputs:
            if inp in indeg:
                indeg[node.id] += 1
                dependents[inp].append(node.id)
    import heapq

    ready = [nid for nid, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        nid = heapq.heappop(ready)
        order.append(nid)
        for dep in dependents[nid]:
            indeg[dep] -= 1
            if indeg[dep] == 0:
                heapq.heappush(ready, dep)
    if len(order) != len(graph.nodes):
        raise ValueError("graph has a cycle; topological order undefined")
    return order


# ---------------------------------------------------------------------------
# audit rendering

def graph_to_text(graph: ExecGraph) -> str:
    """Deterministic human-readable listing (the audit artifact)."""
    if not graph.nodes:
        return ""
    lines = []
    for nid in topo_order(graph):
        node = graph.nodes[nid]
        summary = _param_summary(node)
        arrow = f" <- {', '.join(node.inputs)}" if node.inputs else ""
        lines.append(f"{nid}: {node.kind}{(' ' + summary) if summary else ''}{arrow}")
    return "\n".join(lines)


def _param_summary(node: Node) -> str:
    p = node.params
    kind = node.kind
    if kind == "entity_load":
        extra = ""
        if p.get("names"):
            extra = " names=" + ",".join(p["names"])
        if p.get("anchors"):
            extra = " anchors=" + ",".join(a["name"] for a in p["anchors"])
        return f"{p['entity']} role={p['role']}{extra}"
    if kind == "attribute_filter":
        return f"{p['role']}.{p['field']} {p['operator']} {p.get('value')!r}"
    if kind == "scope_constraint":
        return f"{p['role']} within scope"
    if kind == "spatial_match":
        out = p["relation"]
        if "distance_m" in p:
            out += f" {_fmt_m(p['distance_m'])}"
        return f"{out} target={p['target_role']} reference={p['reference_role']}"
    if kind == "relation_snap":
        flag = " (implicit)" if p.get("implicit") else ""
        return f"{p['from_role']}->{p['to_role']} tolerance={_fmt_m(p['tolerance_m'])}{flag}"
    if kind == "aggregate":
        out = f"{p['metric']} of {p['support_role']} per {p['primary_role']} by {p['attribution']}"
        if "distance_m" in p:
            out += f" {_fmt_m(p['distance_m'])}"
        return out
    if kind == "rank":
        return f"{p['metric']} {p['order']} top_n={p['top_n']}"
    if kind == "role_materialize":
        return "roles=" + ",".join(p.get("roles", []))
    return ""


def _fmt_m(v) -> str:
    f = float(v)
    return f"{int(f)}m" if f == int(f) else f"{f}m"
