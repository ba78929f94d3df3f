"""Adjustment-family identification formulas over observational joint tables.

Every operation here rewrites an interventional quantity as a functional of
the observational law: covariate adjustment and its propensity-grouped
variant, the mediator (front-door) identity, the crop-yield two-route
identity, and the two-stage g-formula.  Each raises a stratum-named
positivity error when a required conditioning event carries no mass, and
each is validated elsewhere against the mutilated-model oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import InvalidArgumentError, PositivityError, ZeroProbabilityError
from .graph import Dag
from .scm import POSITIVITY_CUTOFF, JointTable, restrict

__all__ = [
    "EffectReport",
    "FrontdoorReport",
    "PropensityTable",
    "adjust",
    "ate",
    "backdoor_effect",
    "eelworms_effect",
    "frontdoor",
    "gformula2",
    "gformula2_given_x",
    "propensity_adjust",
    "propensity_table",
]

_LAMBDA_DECIMALS = 12


@dataclass(frozen=True)
class EffectReport:
    """A named interventional estimate: per-treatment response laws plus ATE."""

    estimand: str
    treatment: str
    treatment_values: tuple
    response: str
    distributions: Mapping
    ate: float | None
    citation: str

    def __post_init__(self) -> None:
        for t, dist in self.distributions.items():
            total = sum(dist.values())
            if abs(total - 1.0) > 1e-10:
                raise InvalidArgumentError(
                    f"response law at treatment {t!r} sums to {total!r}"
                )


@dataclass(frozen=True)
class PropensityTable:
    """Per-covariate-configuration treatment assignment vectors."""

    x_nodes: tuple[str, ...]
    t_node: str
    t_values: tuple
    rows: Mapping[tuple, tuple]

    def __post_init__(self) -> None:
        for cfg, row in self.rows.items():
            total = sum(row)
            if abs(total - 1.0) > 1e-12:
                raise InvalidArgumentError(
                    f"assignment vector at {cfg!r} sums to {total!r}"
                )


@dataclass(frozen=True)
class FrontdoorReport:
    """Mediator-identity output.

    `effect[(y, w)]` is l_y(w), the identified law of W under setting the
    exposure to y; `intermediate[(z, w)]` is m_z(w), the identified law of W
    under a fixed mediator level z.
    """

    effect: Mapping[tuple, float]
    intermediate: Mapping[tuple, float]


def _fmt_stratum(given: Mapping) -> str:
    return ", ".join(f"{k}={given[k]!r}" for k in sorted(given))


def _conditional(joint: JointTable, target: str, given: Mapping) -> dict:
    """P(target = . | given) as a plain dict, or a stratum-named error."""
    try:
        law = restrict(joint, (target,), given)
    except ZeroProbabilityError:
        raise PositivityError(
            f"conditioning stratum {{{_fmt_stratum(given)}}} has no mass"
        ) from None
    return {cfg[0]: p for cfg, p in law.probs.items()}


def support_values(joint: JointTable, node: str) -> list:
    """Values of `node` carrying positive mass, in a stable order."""
    i = joint.index(node)
    seen = {cfg[i] for cfg in joint.probs}
    try:
        return sorted(seen)
    except TypeError:
        return sorted(seen, key=str)


def _require_nodes(joint: JointTable, nodes) -> None:
    missing = [n for n in nodes if n not in joint.order]
    if missing:
        raise InvalidArgumentError(f"joint table lacks nodes {missing}")
    if len(set(nodes)) != len(list(nodes)):
        raise InvalidArgumentError("role bindings must be distinct nodes")


def _require_structure(dag: Dag | None, nodes, edges, label: str) -> None:
    """Exact shape check used by the per-figure formulas."""
    if dag is None:
        return
    if set(dag.nodes) != set(nodes) or set(dag.edges) != set(edges):
        raise InvalidArgumentError(f"graph does not have the {label} shape")


def _stratum_tables(joint: JointTable, t_node: str, r_node: str, z_nodes: tuple):
    """Mass tables P(z), P(t,z), P(r,t,z) keyed by covariate configuration."""
    pos_t = joint.index(t_node)
    pos_r = joint.index(r_node)
    pos_z = [joint.index(z) for z in z_nodes]
    p_z: dict = {}
    p_tz: dict = {}
    p_rtz: dict = {}
    for cfg, mass in joint.probs.items():
        z = tuple(cfg[i] for i in pos_z)
        t = cfg[pos_t]
        r = cfg[pos_r]
        p_z[z] = p_z.get(z, 0) + mass
        p_tz[t, z] = p_tz.get((t, z), 0) + mass
        p_rtz[r, t, z] = p_rtz.get((r, t, z), 0) + mass
    return p_z, p_tz, p_rtz


def _adjust_over_strata(p_z, p_tz, p_rtz, t_val, z_nodes) -> dict:
    out: dict = {}
    for z, mass in p_z.items():
        if mass <= POSITIVITY_CUTOFF:
            continue
        denom = p_tz.get((t_val, z), 0)
        if denom <= POSITIVITY_CUTOFF:
            stratum = {n: v for n, v in zip(z_nodes, z)}
            raise PositivityError(
                f"treatment value {t_val!r} never occurs in stratum "
                f"{{{_fmt_stratum(stratum)}}}"
            )
        for (r, t, zz), m in p_rtz.items():
            if t == t_val and zz == z:
                out[r] = out.get(r, 0) + mass * m / denom
    return out


def adjust(joint: JointTable, t_node: str, t_val, r_node: str, z_nodes) -> dict:
    """Covariate-adjusted response law: sum_z P(R | T=t, Z=z) P(Z=z)."""
    z_nodes = tuple(z_nodes)
    _require_nodes(joint, (t_node, r_node) + z_nodes)
    p_z, p_tz, p_rtz = _stratum_tables(joint, t_node, r_node, z_nodes)
    return _adjust_over_strata(p_z, p_tz, p_rtz, t_val, z_nodes)


def ate(joint: JointTable, t_node: str, t_val, t_alt, r_node: str, z_nodes) -> float:
    """Mean difference of the adjusted response laws at t_val versus t_alt."""
    first = adjust(joint, t_node, t_val, r_node, z_nodes)
    second = adjust(joint, t_node, t_alt, r_node, z_nodes)
    values = set(first) | set(second)
    return float(
        sum(v * (first.get(v, 0) - second.get(v, 0)) for v in values)
    )


def propensity_table(joint: JointTable, t_node: str, z_nodes) -> PropensityTable:
    """Treatment assignment vector per covariate configuration."""
    z_nodes = tuple(z_nodes)
    _require_nodes(joint, (t_node,) + z_nodes)
    t_values = tuple(support_values(joint, t_node))
    pos_t = joint.index(t_node)
    pos_z = [joint.index(z) for z in z_nodes]
    p_z: dict = {}
    p_tz: dict = {}
    for cfg, mass in joint.probs.items():
        z = tuple(cfg[i] for i in pos_z)
        p_z[z] = p_z.get(z, 0) + mass
        p_tz[cfg[pos_t], z] = p_tz.get((cfg[pos_t], z), 0) + mass
    rows = {}
    for z, mass in p_z.items():
        if mass <= POSITIVITY_CUTOFF:
            continue
        rows[z] = tuple(p_tz.get((t, z), 0) / mass for t in t_values)
    return PropensityTable(z_nodes, t_node, t_values, rows)


def propensity_adjust(
    joint: JointTable, t_node: str, t_val, r_node: str, z_nodes
) -> dict:
    """Adjustment over assignment-vector strata instead of raw covariates.

    Covariate configurations whose assignment vectors agree to 12 decimals
    are pooled into one stratum before adjusting.
    """
    z_nodes = tuple(z_nodes)
    _require_nodes(joint, (t_node, r_node) + z_nodes)
    table = propensity_table(joint, t_node, z_nodes)
    group_of = {
        z: tuple(round(v, _LAMBDA_DECIMALS) for v in row)
        for z, row in table.rows.items()
    }
    p_z, p_tz, p_rtz = _stratum_tables(joint, t_node, r_node, z_nodes)
    g_z: dict = {}
    g_tz: dict = {}
    g_rtz: dict = {}
    for z, mass in p_z.items():
        if z not in group_of:
            continue
        g = group_of[z]
        g_z[g] = g_z.get(g, 0) + mass
    for (t, z), mass in p_tz.items():
        if z not in group_of:
            continue
        g = group_of[z]
        g_tz[t, g] = g_tz.get((t, g), 0) + mass
    for (r, t, z), mass in p_rtz.items():
        if z not in group_of:
            continue
        g = group_of[z]
        g_rtz[r, t, g] = g_rtz.get((r, t, g), 0) + mass
    grouped_names = (f"lambda({', '.join(z_nodes)})",)
    return _adjust_over_strata(g_z, g_tz, g_rtz, t_val, grouped_names)


def backdoor_effect(
    joint: JointTable,
    t_node: str,
    t_values,
    r_node: str,
    z_nodes,
    method: str = "adjust",
) -> EffectReport:
    """Package adjusted response laws (and ATE for a pair) as a report."""
    t_values = tuple(t_values)
    if method == "adjust":
        law = adjust
        name = "covariate adjustment"
    elif method == "propensity":
        law = propensity_adjust
        name = "propensity-grouped adjustment"
    else:
        raise InvalidArgumentError(f"unknown adjustment method {method!r}")
    distributions = {t: law(joint, t_node, t, r_node, z_nodes) for t in t_values}
    effect = None
    if len(t_values) == 2:
        try:
            effect = ate(joint, t_node, t_values[0], t_values[1], r_node, z_nodes)
        except TypeError:
            effect = None
    return EffectReport(
        estimand=name,
        treatment=t_node,
        treatment_values=t_values,
        response=r_node,
        distributions=distributions,
        ate=effect,
        citation=(
            f"sum over z of P({r_node} | {t_node}=t, z) P(z), "
            f"z ranging over {tuple(z_nodes)}"
        ),
    )


def frontdoor(
    joint: JointTable,
    y_node: str,
    z_node: str,
    w_node: str,
    dag: Dag | None = None,
    x_node: str = "X",
) -> FrontdoorReport:
    """Mediator identity for the exposure -> deposit -> outcome chain.

    Returns l_y(w) = sum over (y', z) of P(W=w | Y=y', Z=z) P(Y=y')
    P(Z=z | Y=y), together with the intermediate m_z(w) = sum over y' of
    P(W=w | Y=y', Z=z) P(Y=y').  The confounder never appears on the
    right-hand side.
    """
    _require_nodes(joint, (y_node, z_node, w_node))
    _require_structure(
        dag,
        (x_node, y_node, z_node, w_node),
        ((x_node, y_node), (x_node, w_node), (y_node, z_node), (z_node, w_node)),
        "exposure/mediator/outcome",
    )
    y_values = support_values(joint, y_node)
    z_values = support_values(joint, z_node)
    w_values = support_values(joint, w_node)
    p_y = _conditional(joint, y_node, {})

    intermediate: dict = {}
    for z in z_values:
        for w in w_values:
            intermediate[z, w] = 0.0
        for y_prime in y_values:
            w_law = _conditional(joint, w_node, {y_node: y_prime, z_node: z})
            for w in w_values:
                intermediate[z, w] += w_law.get(w, 0) * p_y[y_prime]

    effect: dict = {}
    for y in y_values:
        z_law = _conditional(joint, z_node, {y_node: y})
        for w in w_values:
            effect[y, w] = 0.0
        for z in z_values:
            weight = z_law.get(z, 0)
            if weight <= POSITIVITY_CUTOFF:
                continue
            for y_prime in y_values:
                w_law = _conditional(joint, w_node, {y_node: y_prime, z_node: z})
                for w in w_values:
                    effect[y, w] += w_law.get(w, 0) * p_y[y_prime] * weight
    return FrontdoorReport(effect=effect, intermediate=intermediate)


def eelworms_effect(
    joint: JointTable, roles: Mapping[str, str], dag: Dag | None = None
) -> dict:
    """Two-route identity for the crop-yield system.

    `roles` binds X (treatment), U (pre-treatment count), V (post-treatment
    count), W (late-season count), Y (yield).  Returns the mapping
    (x, y) -> mu_x(y) built from observables only:

        mu_x(y) = sum over (v, w) of P(Y=y | X=x, V=v, W=w)
                  * sum over u of P(V=v | X=x, U=u)
                  * sum over x' of P(W=w | V=v, X=x', U=u) P(X=x', U=u)
    """
    for role in ("X", "U", "V", "W", "Y"):
        if role not in roles:
            raise InvalidArgumentError(f"missing role binding {role!r}")
    x_n, u_n, v_n, w_n, y_n = (roles[r] for r in ("X", "U", "V", "W", "Y"))
    _require_nodes(joint, (x_n, u_n, v_n, w_n, y_n))
    if dag is not None:
        latent = sorted(set(dag.nodes) - {x_n, u_n, v_n, w_n, y_n})
        if len(latent) != 2:
            raise InvalidArgumentError("expected exactly two latent nodes")
        first, second = latent
        a_n, b_n = (first, second) if dag.has_edge(first, second) else (second, first)
        _require_structure(
            dag,
            (a_n, b_n, u_n, x_n, v_n, w_n, y_n),
            (
                (a_n, b_n),
                (a_n, u_n),
                (a_n, x_n),
                (u_n, v_n),
                (x_n, v_n),
                (b_n, w_n),
                (v_n, w_n),
                (x_n, y_n),
                (v_n, y_n),
                (w_n, y_n),
            ),
            "crop-yield",
        )

    x_values = support_values(joint, x_n)
    u_values = support_values(joint, u_n)
    v_values = support_values(joint, v_n)
    w_values = support_values(joint, w_n)
    y_values = support_values(joint, y_n)
    p_xu = restrict(joint, (x_n, u_n))

    out: dict = {}
    for x in x_values:
        for y in y_values:
            out[x, y] = 0.0
        for v in v_values:
            # weight[w] = sum over u of P(v | x, u) * sum over x' of
            #             P(w | v, x', u) P(x', u)
            weight = {w: 0.0 for w in w_values}
            for u in u_values:
                v_law = _conditional(joint, v_n, {x_n: x, u_n: u})
                pv = v_law.get(v, 0)
                if pv <= POSITIVITY_CUTOFF:
                    continue
                for x_prime in x_values:
                    mass = p_xu.probs.get((x_prime, u), 0)
                    if mass <= POSITIVITY_CUTOFF:
                        continue
                    w_law = _conditional(
                        joint, w_n, {v_n: v, x_n: x_prime, u_n: u}
                    )
                    for w in w_values:
                        weight[w] += pv * w_law.get(w, 0) * mass
            for w in w_values:
                if weight[w] <= POSITIVITY_CUTOFF:
                    continue
                y_law = _conditional(joint, y_n, {x_n: x, v_n: v, w_n: w})
                for y in y_values:
                    out[x, y] += y_law.get(y, 0) * weight[w]
    return out


_GFORMULA_ROLES = ("X", "T", "R", "X2", "T2", "R2")


def _gformula_nodes(joint: JointTable, roles: Mapping[str, str]) -> tuple:
    for role in _GFORMULA_ROLES:
        if role not in roles:
            raise InvalidArgumentError(f"missing role binding {role!r}")
    nodes = tuple(roles[r] for r in _GFORMULA_ROLES)
    _require_nodes(joint, nodes)
    return nodes


def gformula_structure(roles: Mapping[str, str]) -> tuple:
    """Edge list of the two-stage treatment graph under a role binding."""
    x, t, r, x2, t2, r2 = (roles[k] for k in _GFORMULA_ROLES)
    return (
        (x, t),
        (x, r),
        (t, r),
        (x, x2),
        (t, x2),
        (r, x2),
        (x2, t2),
        (t, t2),
        (r, t2),
        (x2, r2),
        (t2, r2),
        (t, r2),
    )


def gformula2(
    joint: JointTable,
    roles: Mapping[str, str],
    t_val,
    t2_val,
    dag: Dag | None = None,
) -> dict:
    """Two-stage g-formula: law of the second response under (t, t')."""
    x_n, t_n, r_n, x2_n, t2_n, r2_n = _gformula_nodes(joint, roles)
    _require_structure(
        dag,
        (x_n, t_n, r_n, x2_n, t2_n, r2_n),
        gformula_structure(roles),
        "two-stage treatment",
    )
    p_x = _conditional(joint, x_n, {})
    out: dict = {}
    for x, px in p_x.items():
        if px <= POSITIVITY_CUTOFF:
            continue
        part = gformula2_given_x(joint, roles, t_val, t2_val, x)
        for r2, p in part.items():
            out[r2] = out.get(r2, 0) + px * p
    return out


def gformula2_given_x(
    joint: JointTable,
    roles: Mapping[str, str],
    t_val,
    t2_val,
    x_val,
) -> dict:
    """Covariate-conditional variant of the two-stage g-formula."""
    x_n, t_n, r_n, x2_n, t2_n, r2_n = _gformula_nodes(joint, roles)
    out: dict = {}
    r_law = _conditional(joint, r_n, {x_n: x_val, t_n: t_val})
    for r, pr in r_law.items():
        if pr <= POSITIVITY_CUTOFF:
            continue
        x2_law = _conditional(joint, x2_n, {x_n: x_val, t_n: t_val, r_n: r})
        for x2, px2 in x2_law.items():
            if px2 <= POSITIVITY_CUTOFF:
                continue
            r2_law = _conditional(
                joint,
                r2_n,
                {x_n: x_val, t_n: t_val, r_n: r, x2_n: x2, t2_n: t2_val},
            )
            for r2, p in r2_law.items():
                out[r2] = out.get(r2, 0) + pr * px2 * p
    return out
