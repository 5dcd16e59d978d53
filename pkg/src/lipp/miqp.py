"""Explicit mixed-integer quadratic model of the load-aware planning problem.

The native solver never needs this model; it exists so that an external
MIQP solver can cross-check results (via :func:`export_model`) and so that
any candidate solution can be checked row by row (:func:`validate_assignment`).

Every constraint row carries a ``tag`` naming the family it belongs to:

=====================  ======================================================
tag                    meaning
=====================  ======================================================
flow_conservation      in-flow equals out-flow (<= 1) at intermediate vertices
start_target           one edge leaves s, one edge enters t
no_backflow            nothing enters s, nothing leaves t
vertex_activation      y_v equals in-flow at intermediate vertices
endpoint_activation    y_s = y_t = 1
A_activation           estimator column v vanishes unless v is visited
order_start            o_s = 0
order_bounds           0 <= o_v <= |V| - 1
mtz                    o_v >= o_u + 1 on active edges (subtour elimination)
load_start             load after sampling at s
load_propagation       load_v >= load_u + samples collected at v on active edges
load_bounds            0 <= L_v <= L_max
robot_mass             R_v = R0 + L_v
load_definition        l_v = sum_c c z_{v,c}
sampling_activation    exactly one sampling level at each visited vertex
A_aggregation          A_{t,v} = sum_c A_{t,v,c}
A_level_link           A_{t,v,c} vanishes unless level c is chosen at v
energy_linearized      sum d_uv T_uv <= B
mccormick              T_uv = R_u chi_uv, written as four linear inequalities
distance_cap           optional sum d_uv chi_uv <= b
=====================  ======================================================
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .gp_field import VarianceEvaluator, default_a_max, optimal_llse
from .graph_world import EnergyParams, Plan, World

BINARY = "binary"
INTEGER = "integer"
CONTINUOUS = "continuous"
ROW_TOL = 1e-6


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: float = -math.inf
    ub: float = math.inf


@dataclass(frozen=True)
class Constraint:
    name: str
    tag: str
    coeffs: dict
    sense: str
    rhs: float

    def lhs(self, values):
        return sum(c * values[v] for v, c in self.coeffs.items())

    def residual(self, values):
        lhs = self.lhs(values)
        if self.sense == "<=":
            return lhs, max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return lhs, max(0.0, self.rhs - lhs)
        return lhs, abs(lhs - self.rhs)


@dataclass
class MiqpModel:
    variables: dict = field(default_factory=dict)
    constraints: list = field(default_factory=list)
    linear: dict = field(default_factory=dict)
    quadratic: dict = field(default_factory=dict)
    constant: float = 0.0
    constants: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def add_var(self, name, kind, lb=-math.inf, ub=math.inf):
        if name in self.variables:
            raise InputError(f"duplicate variable {name}")
        self.variables[name] = Variable(name, kind, float(lb), float(ub))
        return name

    def add_row(self, tag, suffix, coeffs, sense, rhs):
        coeffs = {v: float(c) for v, c in coeffs.items() if c != 0}
        if not coeffs:
            return None
        row = Constraint(f"{tag}__{suffix}", tag, coeffs, sense, float(rhs))
        self.constraints.append(row)
        return row

    def add_quad(self, a, b, coef):
        key = (a, b) if a <= b else (b, a)
        self.quadratic[key] = self.quadratic.get(key, 0.0) + coef

    def count(self, prefix):
        return sum(1 for v in self.variables if v.split("_")[0] == prefix)

    def objective_value(self, values):
        total = self.constant
        total += sum(c * values[v] for v, c in self.linear.items())
        total += sum(c * values[a] * values[b] for (a, b), c in self.quadratic.items())
        return float(total)

    def quadratic_matrix(self):
        """Symmetric ``Q`` with objective quadratic part ``x^T Q x`` over continuous vars."""
        names = [v for v, var in self.variables.items() if var.kind == CONTINUOUS]
        index = {v: i for i, v in enumerate(names)}
        Q = np.zeros((len(names), len(names)))
        for (a, b), c in self.quadratic.items():
            i, j = index[a], index[b]
            if i == j:
                Q[i, i] += c
            else:
                Q[i, j] += c / 2
                Q[j, i] += c / 2
        return names, Q

    def rows_by_tag(self):
        out = {}
        for row in self.constraints:
            out.setdefault(row.tag, []).append(row)
        return out


def _chi(u, v):
    return f"chi_{u}_{v}"


def build_miqp(query, a_max=None, load_cap=None):
    """Instantiate every variable and constraint family for ``query``.

    ``query`` is a :class:`lipp.solver.PlanQuery`. Big-M constants:
    order ``|V|``, load ``L_max + lam S_max``, mass ``R_max = R0 + L_max``.
    """
    world, fm, params = query.world, query.field, query.energy
    n, m, S = world.n, fm.m, params.s_max
    s, t = world.start, world.target
    lam, r0 = params.lam, params.base_mass
    l_max = load_cap if load_cap is not None else params.load_cap(n)
    r_max = r0 + l_max
    if a_max is None:
        a_max = default_a_max(fm, world.positions, S)
    m_order = n
    m_load = l_max + lam * S
    ev = VarianceEvaluator(fm, world.positions)

    model = MiqpModel()
    model.constants = {
        "A_max": a_max,
        "M_order": m_order,
        "M_load": m_load,
        "R_max": r_max,
        "L_max": l_max,
        "B": params.budget,
        "b": params.distance_cap,
        "R0": r0,
        "lambda": lam,
        "S_max": S,
        "noise_variance": fm.noise_variance,
    }
    model.meta = {
        "n": n,
        "m": m,
        "start": s,
        "target": t,
        "edges": [[u, v, c] for u, v, c in world.edges],
    }

    edges = world.edges
    levels = range(1, S + 1)
    inner = [v for v in range(n) if v not in (s, t)]
    for u, v, _ in edges:
        model.add_var(_chi(u, v), BINARY, 0, 1)
    for v in range(n):
        model.add_var(f"y_{v}", BINARY, 0, 1)
    for v in range(n):
        for c in levels:
            model.add_var(f"z_{v}_{c}", BINARY, 0, 1)
    for v in range(n):
        model.add_var(f"o_{v}", INTEGER, 0, n - 1)
    for v in range(n):
        model.add_var(f"l_{v}", INTEGER, 0, S)
    for v in range(n):
        model.add_var(f"load_{v}", CONTINUOUS, 0, l_max)
    for v in range(n):
        model.add_var(f"mass_{v}", CONTINUOUS, 0, r_max)
    for k in range(m):
        for v in range(n):
            model.add_var(f"A_{k}_{v}", CONTINUOUS, -a_max, a_max)
    for k in range(m):
        for v in range(n):
            for c in levels:
                model.add_var(f"Atvc_{k}_{v}_{c}", CONTINUOUS)
    for u, v, _ in edges:
        model.add_var(f"T_{u}_{v}", CONTINUOUS, 0, math.inf)

    ins = {v: [] for v in range(n)}
    outs = {v: [] for v in range(n)}
    for u, v, _ in edges:
        outs[u].append(_chi(u, v))
        ins[v].append(_chi(u, v))

    for v in inner:
        flow = {x: 1.0 for x in ins[v]}
        for x in outs[v]:
            flow[x] = flow.get(x, 0.0) - 1.0
        model.add_row("flow_conservation", f"{v}_balance", flow, "=", 0)
        model.add_row("flow_conservation", f"{v}_single", {x: 1 for x in outs[v]}, "<=", 1)
    model.add_row("start_target", "out_s", {x: 1 for x in outs[s]}, "=", 1)
    model.add_row("start_target", "in_t", {x: 1 for x in ins[t]}, "=", 1)
    model.add_row("no_backflow", "in_s", {x: 1 for x in ins[s]}, "=", 0)
    model.add_row("no_backflow", "out_t", {x: 1 for x in outs[t]}, "=", 0)
    for v in inner:
        coeffs = {f"y_{v}": 1.0}
        coeffs.update({x: -1.0 for x in ins[v]})
        model.add_row("vertex_activation", v, coeffs, "=", 0)
    model.add_row("endpoint_activation", "s", {f"y_{s}": 1}, "=", 1)
    model.add_row("endpoint_activation", "t", {f"y_{t}": 1}, "=", 1)
    for k in range(m):
        for v in inner:
            model.add_row("A_activation", f"{k}_{v}_ub", {f"A_{k}_{v}": 1, f"y_{v}": -a_max}, "<=", 0)
            model.add_row("A_activation", f"{k}_{v}_lb", {f"A_{k}_{v}": 1, f"y_{v}": a_max}, ">=", 0)

    model.add_row("order_start", s, {f"o_{s}": 1}, "=", 0)
    for v in range(n):
        model.add_row("order_bounds", f"{v}_lb", {f"o_{v}": 1}, ">=", 0)
        model.add_row("order_bounds", f"{v}_ub", {f"o_{v}": 1}, "<=", n - 1)
    for u, v, _ in edges:
        model.add_row(
            "mtz", f"{u}_{v}",
            {f"o_{v}": 1, f"o_{u}": -1, _chi(u, v): -m_order}, ">=", 1 - m_order,
        )

    def samples(v, scale):
        return {f"z_{v}_{c}": scale * c for c in levels}

    model.add_row("load_start", s, {f"load_{s}": 1, **samples(s, -lam)}, "=", 0)
    for u, v, _ in edges:
        coeffs = {f"load_{v}": 1, f"load_{u}": -1, _chi(u, v): -m_load, **samples(v, -lam)}
        model.add_row("load_propagation", f"{u}_{v}", coeffs, ">=", -m_load)
    for v in range(n):
        model.add_row("load_bounds", f"{v}_lb", {f"load_{v}": 1}, ">=", 0)
        model.add_row("load_bounds", f"{v}_ub", {f"load_{v}": 1}, "<=", l_max)
        model.add_row("robot_mass", v, {f"mass_{v}": 1, f"load_{v}": -1}, "=", r0)
        model.add_row("load_definition", v, {f"l_{v}": 1, **samples(v, -1)}, "=", 0)
        coeffs = {f"z_{v}_{c}": 1 for c in levels}
        coeffs[f"y_{v}"] = -1
        model.add_row("sampling_activation", v, coeffs, "=", 0)

    for k in range(m):
        for v in range(n):
            coeffs = {f"A_{k}_{v}": 1}
            coeffs.update({f"Atvc_{k}_{v}_{c}": -1 for c in levels})
            model.add_row("A_aggregation", f"{k}_{v}", coeffs, "=", 0)
            for c in levels:
                a, z = f"Atvc_{k}_{v}_{c}", f"z_{v}_{c}"
                model.add_row("A_level_link", f"{k}_{v}_{c}_ub", {a: 1, z: -a_max}, "<=", 0)
                model.add_row("A_level_link", f"{k}_{v}_{c}_lb", {a: 1, z: a_max}, ">=", 0)

    model.add_row("energy_linearized", "budget", {f"T_{u}_{v}": d for u, v, d in edges}, "<=", params.budget)
    for u, v, _ in edges:
        T, chi, R = f"T_{u}_{v}", _chi(u, v), f"mass_{u}"
        model.add_row("mccormick", f"{u}_{v}_mass", {T: 1, R: -1}, "<=", 0)
        model.add_row("mccormick", f"{u}_{v}_active", {T: 1, chi: -r_max}, "<=", 0)
        model.add_row("mccormick", f"{u}_{v}_lower", {T: 1, R: -1, chi: -r_max}, ">=", -r_max)
        model.add_row("mccormick", f"{u}_{v}_nonneg", {T: 1}, ">=", 0)
    if params.distance_cap is not None:
        model.add_row("distance_cap", "length", {_chi(u, v): d for u, v, d in edges}, "<=", params.distance_cap)

    w = fm.weights
    sigma2 = fm.noise_variance
    for k in range(m):
        wk = float(w[k])
        if wk == 0:
            continue
        for v1 in range(n):
            model.add_quad(f"A_{k}_{v1}", f"A_{k}_{v1}", wk * ev.k_vv[v1, v1])
            for v2 in range(v1 + 1, n):
                model.add_quad(f"A_{k}_{v1}", f"A_{k}_{v2}", 2 * wk * ev.k_vv[v1, v2])
            for c in levels:
                model.add_quad(f"Atvc_{k}_{v1}_{c}", f"Atvc_{k}_{v1}_{c}", wk * sigma2 / c)
            model.linear[f"A_{k}_{v1}"] = -2 * wk * ev.k_tv[k, v1]
        model.constant += wk * fm.kernel.signal_variance
    return model


# -- assignments --------------------------------------------------------------


def assignment_from_plan(query, model: MiqpModel, plan: Plan):
    """Encode ``plan`` as a full variable assignment (estimator from the LLSE)."""
    world, params = query.world, query.energy
    n, S = world.n, params.s_max
    values = {name: 0.0 for name in model.variables}
    load = 0.0
    for pos, (v, count) in enumerate(plan.steps):
        values[f"y_{v}"] = 1.0
        values[f"o_{v}"] = float(pos)
        values[f"l_{v}"] = float(count)
        if count >= 1:
            values[f"z_{v}_{count}"] = 1.0
        load += params.lam * count
        values[f"load_{v}"] = load
    for v in range(n):
        values[f"mass_{v}"] = params.base_mass + values[f"load_{v}"]
    for (u, _), (v, _) in zip(plan.steps, plan.steps[1:]):
        values[_chi(u, v)] = 1.0
        values[f"T_{u}_{v}"] = values[f"mass_{u}"]
    est, _ = optimal_llse(query.field, world.positions, plan.allocation())
    for (v, count) in plan.steps:
        for k in range(query.field.m):
            a = float(est.coefficients[k, v])
            values[f"A_{k}_{v}"] = a
            if 1 <= count <= S:
                values[f"Atvc_{k}_{v}_{count}"] = a
    return values


def mccormick_interval(r_u, chi, r_max):
    """Feasible ``[lo, hi]`` for ``T`` under the four envelope inequalities."""
    lo = max(0.0, r_u - r_max * (1 - chi))
    hi = min(r_u, r_max * chi)
    return lo, hi


@dataclass
class ValidationReport:
    rows: list
    objective: float
    plan: dict | None
    passthrough_vertices: list

    @property
    def failures(self):
        return [r for r in self.rows if not r["pass"]]

    @property
    def all_pass(self):
        return not self.failures

    def failed_tags(self):
        return sorted({r["constraint_tag"] for r in self.failures})

    def to_dict(self):
        return {
            "all_pass": self.all_pass,
            "n_rows": len(self.rows),
            "n_failed": len(self.failures),
            "failed_tags": self.failed_tags(),
            "objective": self.objective,
            "plan": self.plan,
            "passthrough_vertices": self.passthrough_vertices,
            "rows": self.rows,
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _row(tag, name, lhs, rhs, residual, tol=ROW_TOL):
    return {
        "constraint_tag": tag,
        "name": name,
        "lhs": lhs,
        "rhs": rhs,
        "residual": residual,
        "pass": bool(residual <= tol),
    }


def _extract_path(model, values):
    s, t = model.meta["start"], model.meta["target"]
    succ = {}
    for u, v, _ in model.meta["edges"]:
        if values[_chi(u, v)] > 0.5:
            succ.setdefault(u, []).append(v)
    path = [s]
    while path[-1] != t:
        nxt = succ.get(path[-1], [])
        if len(nxt) != 1 or nxt[0] in path:
            return None
        path.append(nxt[0])
    return path


def validate_assignment(model: MiqpModel, assignment) -> ValidationReport:
    """Check every row, bound and integrality requirement, then the implied plan."""
    missing = [v for v in model.variables if v not in assignment]
    if missing:
        raise InputError(f"assignment lacks {len(missing)} variables, e.g. {missing[:3]}")
    values = {k: float(assignment[k]) for k in model.variables}
    rows = []
    for row in model.constraints:
        lhs, res = row.residual(values)
        rows.append(_row(row.tag, row.name, lhs, row.rhs, res))
    for var in model.variables.values():
        x = values[var.name]
        res = max(0.0, var.lb - x, x - var.ub)
        rows.append(_row("bounds", var.name, x, [var.lb, var.ub], res))
        if var.kind in (BINARY, INTEGER):
            rows.append(_row("integrality", var.name, x, round(x), abs(x - round(x))))

    plan = None
    path = _extract_path(model, values)
    passthrough = []
    c = model.constants
    if path is None:
        rows.append(_row("plan_extraction", "path", None, None, math.inf))
    else:
        counts = [int(round(values[f"l_{v}"])) for v in path]
        passthrough = [v for v, k in zip(path, counts) if k == 0]
        cost = {(u, v): d for u, v, d in model.meta["edges"]}
        mass = c["R0"]
        true_energy = 0.0
        for j in range(len(path) - 1):
            mass += c["lambda"] * counts[j]
            true_energy += cost[(path[j], path[j + 1])] * mass
        linearized = sum(d * values[f"T_{u}_{v}"] for u, v, d in model.meta["edges"])
        rows.append(_row("plan_energy_budget", "energy", true_energy, c["B"], max(0.0, true_energy - c["B"])))
        rows.append(_row(
            "mccormick_exactness", "energy", linearized, true_energy,
            abs(linearized - true_energy),
        ))
        plan = {
            "steps": [[v, k] for v, k in zip(path, counts)],
            "energy": true_energy,
            "distance": sum(cost[(a, b)] for a, b in zip(path, path[1:])),
        }
    return ValidationReport(rows, model.objective_value(values), plan, passthrough)


# -- LP interchange -----------------------------------------------------------

_TERMS_PER_LINE = 6


def _num(x):
    return format(float(x), ".17g")


def _linear_terms(coeffs):
    out = []
    for name, c in coeffs.items():
        sign = "-" if c < 0 else "+"
        out.append(f"{sign} {_num(abs(c))} {name}")
    return out


def _wrap(head, terms):
    lines = []
    for i in range(0, max(len(terms), 1), _TERMS_PER_LINE):
        chunk = " ".join(terms[i:i + _TERMS_PER_LINE])
        lines.append((f" {head} " if i == 0 else "   ") + chunk)
    return lines


def model_to_lp(model: MiqpModel) -> str:
    """Render ``model`` in CPLEX LP format (quadratic objective in ``[ ] / 2``)."""
    header = {"constants": model.constants, "meta": model.meta}
    out = ["\\ load-aware informative path planning MIQP", "\\ meta: " + json.dumps(header, sort_keys=True)]
    out.append("Minimize")
    terms = _linear_terms(model.linear)
    if model.quadratic:
        quad = []
        for (a, b), c in model.quadratic.items():
            sign = "-" if c < 0 else "+"
            body = f"{a} ^2" if a == b else f"{a} * {b}"
            quad.append(f"{sign} {_num(abs(2 * c))} {body}")
        quad[0] = quad[0].lstrip("+ ")
        terms += ["+ ["] + quad + ["] / 2"]
    if model.constant:
        terms.append(f"{'-' if model.constant < 0 else '+'} {_num(abs(model.constant))}")
    out += _wrap("obj:", terms)
    out.append("Subject To")
    for row in model.constraints:
        terms = _linear_terms(row.coeffs)
        terms.append(f"{row.sense} {_num(row.rhs)}")
        out += _wrap(f"{row.name}:", terms)
    out.append("Bounds")
    for var in model.variables.values():
        if var.kind == BINARY:
            continue
        if math.isinf(var.lb) and math.isinf(var.ub):
            out.append(f" {var.name} free")
        elif math.isinf(var.ub):
            out.append(f" {var.name} >= {_num(var.lb)}")
        else:
            lo = "-inf" if math.isinf(var.lb) else _num(var.lb)
            out.append(f" {lo} <= {var.name} <= {_num(var.ub)}")
    for section, kind in (("General", INTEGER), ("Binary", BINARY)):
        names = [v.name for v in model.variables.values() if v.kind == kind]
        out.append(section)
        for i in range(0, len(names), 8):
            out.append(" " + " ".join(names[i:i + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


def export_model(model: MiqpModel, destination):
    text = model_to_lp(model)
    Path(destination).write_text(text, encoding="utf-8")
    return Path(destination)


_ITEM = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*:(.*)$")
_SECTIONS = {
    "minimize": "obj",
    "subject to": "rows",
    "bounds": "bounds",
    "general": "general",
    "binary": "binary",
    "end": "end",
}


def _parse_linear(tokens):
    coeffs = {}
    i, sign = 0, 1.0
    while i < len(tokens):
        tok = tokens[i]
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            i += 1
            continue
        coef = float(tok)
        coeffs[tokens[i + 1]] = sign * coef
        sign = 1.0
        i += 2
    return coeffs


def _parse_objective(tokens, model):
    if "[" in tokens:
        a, b = tokens.index("["), tokens.index("]")
        lin, quad, tail = tokens[:a - 1], tokens[a + 1:b], tokens[b + 3:]
    else:
        lin, quad, tail = tokens, [], []
    const = 0.0
    if lin and len(lin) % 3 == 2:
        # trailing constant without a variable name
        const = float(lin[-1]) * (-1 if lin[-2] == "-" else 1)
        lin = lin[:-2]
    if tail:
        const = float(tail[1]) * (-1 if tail[0] == "-" else 1)
    model.linear = _parse_linear(lin)
    model.constant = const
    i, sign = 0, 1.0
    while i < len(quad):
        tok = quad[i]
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            i += 1
            continue
        coef = sign * float(tok) / 2
        if quad[i + 2] == "^2":
            model.add_quad(quad[i + 1], quad[i + 1], coef)
            i += 3
        else:
            model.add_quad(quad[i + 1], quad[i + 3], coef)
            i += 4
        sign = 1.0


def parse_lp(text) -> MiqpModel:
    """Read back a model written by :func:`model_to_lp`."""
    model = MiqpModel()
    section = None
    items = []
    kinds = {}
    bounds = {}
    order = []
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("\\"):
            if line.startswith("\\ meta:"):
                header = json.loads(line[len("\\ meta:"):])
                model.constants, model.meta = header["constants"], header["meta"]
            continue
        if not line:
            continue
        if line.lower() in _SECTIONS:
            section = _SECTIONS[line.lower()]
            continue
        if section in ("obj", "rows"):
            match = _ITEM.match(raw)
            if match:
                items.append((section, match.group(1), match.group(2).split()))
            else:
                items[-1][2].extend(line.split())
        elif section == "bounds":
            tok = line.split()
            if tok[-1] == "free":
                bounds[tok[0]] = (-math.inf, math.inf)
            elif tok[1] == ">=":
                bounds[tok[0]] = (float(tok[2]), math.inf)
            else:
                bounds[tok[2]] = (float(tok[0]), float(tok[4]))
            order.append(tok[2] if tok[1] == "<=" else tok[0])
        elif section in ("general", "binary"):
            for name in line.split():
                kinds[name] = INTEGER if section == "general" else BINARY
    for section, name, tokens in items:
        if section == "obj":
            _parse_objective(tokens, model)
            continue
        sense, rhs = tokens[-2], float(tokens[-1])
        tag = name.split("__")[0]
        model.constraints.append(Constraint(name, tag, _parse_linear(tokens[:-2]), sense, rhs))
    names = _variable_order(model, order, kinds)
    for name in names:
        kind = kinds.get(name, CONTINUOUS)
        lb, ub = (0.0, 1.0) if kind == BINARY else bounds.get(name, (0.0, math.inf))
        model.variables[name] = Variable(name, kind, lb, ub)
    return model


_PREFIX_ORDER = ("chi", "y", "z", "o", "l", "load", "mass", "A", "Atvc", "T")


def _variable_order(model, bounded, kinds):
    seen = set(bounded) | set(kinds) | set(model.linear)
    for row in model.constraints:
        seen.update(row.coeffs)
    for a, b in model.quadratic:
        seen.update((a, b))

    # edge variables follow the builder's edge order, recorded in the header
    edge_rank = {(u, v): i for i, (u, v, _) in enumerate(model.meta.get("edges", []))}

    def key(name):
        head, *idx = name.split("_")
        rank = _PREFIX_ORDER.index(head) if head in _PREFIX_ORDER else len(_PREFIX_ORDER)
        nums = [int(i) if i.isdigit() else i for i in idx]
        if head in ("chi", "T") and tuple(nums) in edge_rank:
            nums = [edge_rank[tuple(nums)]]
        return (rank, nums)

    return sorted(seen, key=key)


def read_model(path) -> MiqpModel:
    return parse_lp(Path(path).read_text(encoding="utf-8"))


def load_assignment(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return data.get("values", data)


def save_assignment(values, path):
    Path(path).write_text(json.dumps({"values": values}, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def plan_energy_params(model: MiqpModel) -> EnergyParams:
    c = model.constants
    return EnergyParams(
        lam=c["lambda"], base_mass=c["R0"], s_max=c["S_max"], l_max=c["L_max"] or None,
        budget=c["B"], distance_cap=c["b"],
    )


def world_from_meta(model: MiqpModel, positions) -> World:
    from .graph_world import Vertex

    verts = [Vertex(i, float(x), float(y)) for i, (x, y) in enumerate(positions)]
    return World(verts, [tuple(e) for e in model.meta["edges"]], model.meta["start"], model.meta["target"])
