"""Further named estimands over observational tables and datasets.

Covers the two-stage direct effect, the test-and-treat policy law, hiring
mediation under an assumed covariate, the natural indirect effect, the
instrumental-variable family (binary ratio, multi-level aggregate, and
two-stage least squares), and stratified odds ratios computed by two
algebraically equivalent routes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import (
    InvalidArgumentError,
    PositivityError,
    WeakInstrumentError,
    ZeroProbabilityError,
)
from .graph import Dag
from .identify import _conditional, _require_nodes, support_values
from .scm import POSITIVITY_CUTOFF, Dataset, JointTable, restrict

__all__ = [
    "IvResult",
    "OddsRatioReport",
    "antibiotic_policy",
    "iv_multi",
    "iv_theta",
    "iv_tsls",
    "mediation_fixed_sex",
    "natural_indirect",
    "odds_ratio",
    "two_stage_direct",
]

_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class IvResult:
    """Instrumental-variable ratio with its ingredients.

    For the multi-level form, `theta` is the overall weighted aggregate,
    `thetas` the per-level ratios, and `weights` their mixing weights.
    For the least-squares form, `first_stage` and `reduced_form` hold the
    two auxiliary regression slopes whose ratio reproduces `theta`.
    """

    theta: object
    numerator: object
    denominator: object
    valid: bool
    thetas: tuple | None = None
    weights: tuple | None = None
    first_stage: object | None = None
    reduced_form: object | None = None

    def __post_init__(self) -> None:
        if self.valid:
            want = float(self.numerator) / float(self.denominator)
            if abs(float(self.theta) - want) > 1e-9 * max(1.0, abs(want)):
                raise InvalidArgumentError("ratio inconsistent with its parts")


@dataclass(frozen=True)
class OddsRatioReport:
    """Per-stratum odds ratios, plus the case-side average.

    `per_x[x]` holds p (exposure rate among responders), q (among
    non-responders), and the ratio.  Exact reports carry the ratio via
    both the response-odds and exposure-odds routes, which must agree;
    estimated reports carry only the exposure route.  `overall` is None
    when no stratum survived estimation.
    """

    per_x: Mapping
    overall: float | None
    warnings: tuple = ()

    def __post_init__(self) -> None:
        for x, cell in self.per_x.items():
            if "ratio_response_odds" not in cell:
                continue
            a = float(cell["ratio_response_odds"])
            b = float(cell["ratio_exposure_odds"])
            if abs(a - b) > 1e-12 * max(1.0, abs(a)):
                raise InvalidArgumentError(
                    f"odds-ratio routes disagree in stratum {x!r}"
                )


def _bound_roles(joint: JointTable, roles: Mapping[str, str], names) -> tuple:
    for role in names:
        if role not in roles:
            raise InvalidArgumentError(f"missing role binding {role!r}")
    nodes = tuple(roles[r] for r in names)
    _require_nodes(joint, nodes)
    return nodes


def _mean(dist: Mapping):
    """Mean of a value -> probability mapping; None for non-numeric values."""
    try:
        return sum(v * p for v, p in dist.items())
    except TypeError:
        return None


def _require_binary(joint: JointTable, node: str) -> None:
    if not set(support_values(joint, node)) <= {0, 1}:
        raise InvalidArgumentError(f"{node!r} must take values in {{0, 1}}")


_TWO_STAGE_ROLE_NAMES = ("Y1", "Y2", "Y3", "Y4")


def _check_two_stage_shape(
    dag: Dag | None, nodes: tuple, second_treatment_edge: str
) -> None:
    """Fig-shape check shared by the two-stage ops.

    `second_treatment_edge` is "optional" when the second treatment may or
    may not see the first, "required" when it must.
    """
    if dag is None:
        return
    y1, y2, y3, y4 = nodes
    latent = sorted(set(dag.nodes) - set(nodes))
    if len(latent) != 1:
        raise InvalidArgumentError("expected exactly one latent node")
    u = latent[0]
    base = {(y2, y1), (y4, y1), (u, y1), (y3, y2), (y4, y3), (u, y3)}
    allowed = [base | {(y4, y2)}]
    if second_treatment_edge == "optional":
        allowed.append(base)
    if set(dag.edges) not in allowed:
        raise InvalidArgumentError("graph does not have the two-stage shape")


def two_stage_direct(
    joint: JointTable,
    roles: Mapping[str, str],
    y2_val,
    t,
    dag: Dag | None = None,
) -> dict:
    """Direct effect of the first treatment with the second held fixed.

    p_t(y) = sum over y3 of P(Y1=y | Y2=y2, Y3=y3, Y4=t) P(Y3=y3 | Y4=t),
    returned with its mean (None when Y1 is not numeric).
    """
    nodes = _bound_roles(joint, roles, _TWO_STAGE_ROLE_NAMES)
    _check_two_stage_shape(dag, nodes, "optional")
    y1_n, y2_n, y3_n, y4_n = nodes
    y3_law = _conditional(joint, y3_n, {y4_n: t})
    law: dict = {}
    for y3, w in y3_law.items():
        if w <= POSITIVITY_CUTOFF:
            continue
        y1_law = _conditional(joint, y1_n, {y2_n: y2_val, y3_n: y3, y4_n: t})
        for y, p in y1_law.items():
            law[y] = law.get(y, 0) + w * p
    return {"law": law, "mean": _mean(law)}


def antibiotic_policy(
    joint: JointTable, roles: Mapping[str, str], dag: Dag | None = None
) -> dict:
    """Law of recovery under "treat every positive test", from observables.

    P(recovery = y1 | severity = y4) under the policy equals
    P(Y1=y1, Y3=0 | Y4=y4) + P(Y1=y1 | Y2=1, Y3=1, Y4=y4) P(Y3=1 | Y4=y4).
    Also reports per-severity means and whether the mean at y4=1 is below
    the mean at y4=0.
    """
    nodes = _bound_roles(joint, roles, _TWO_STAGE_ROLE_NAMES)
    _check_two_stage_shape(dag, nodes, "required")
    y1_n, y2_n, y3_n, y4_n = nodes
    _require_binary(joint, y2_n)
    _require_binary(joint, y3_n)
    y1_values = support_values(joint, y1_n)
    law: dict = {}
    means: dict = {}
    for y4 in support_values(joint, y4_n):
        try:
            pair = restrict(joint, (y1_n, y3_n), {y4_n: y4})
        except ZeroProbabilityError:
            raise PositivityError(
                f"conditioning stratum {{{y4_n}={y4!r}}} has no mass"
            ) from None
        p3 = sum(p for (y1, y3), p in pair.probs.items() if y3 == 1)
        treated: dict = {}
        if p3 > POSITIVITY_CUTOFF:
            treated = _conditional(joint, y1_n, {y2_n: 1, y3_n: 1, y4_n: y4})
        per_y4 = {}
        for y1 in y1_values:
            value = pair.probs.get((y1, 0), 0) + treated.get(y1, 0) * p3
            law[y1, y4] = value
            per_y4[y1] = value
        means[y4] = _mean(per_y4)
    comparison = None
    if 0 in means and 1 in means and None not in (means[0], means[1]):
        comparison = bool(means[1] < means[0])
    return {"law": law, "means": means, "mean_at_1_lower": comparison}


_HIRING_ROLE_NAMES = ("H", "B", "Q", "S")


def _check_hiring_shape(dag: Dag | None, nodes: tuple) -> None:
    if dag is None:
        return
    h, b, q, s = nodes
    want = {(s, b), (s, q), (s, h), (b, q), (b, h), (q, h)}
    if set(dag.nodes) != set(nodes) or set(dag.edges) != want:
        raise InvalidArgumentError("graph does not have the hiring shape")


def mediation_fixed_sex(
    joint: JointTable,
    roles: Mapping[str, str],
    sigma_dist: Mapping,
    dag: Dag | None = None,
) -> dict:
    """Hiring law when the decision sees an assumed covariate drawn from
    `sigma_dist` in place of the real one: mapping (h, b, q) ->
    sum over s' of P(H=h | B=b, Q=q, S=s') sigma_dist(s')."""
    nodes = _bound_roles(joint, roles, _HIRING_ROLE_NAMES)
    _check_hiring_shape(dag, nodes)
    h_n, b_n, q_n, s_n = nodes
    total = sum(sigma_dist.values())
    if abs(total - 1) > 1e-12:
        raise InvalidArgumentError(f"assumed-covariate weights sum to {total!r}")
    support = [s for s, w in sigma_dist.items() if w > 0]
    if not support:
        raise InvalidArgumentError("assumed-covariate law has empty support")
    out: dict = {}
    bq = restrict(joint, (b_n, q_n))
    for (b, q), mass in sorted(bq.probs.items(), key=lambda kv: str(kv[0])):
        if mass <= POSITIVITY_CUTOFF:
            continue
        law: dict = {}
        for s in support:
            h_law = _conditional(joint, h_n, {b_n: b, q_n: q, s_n: s})
            for h, p in h_law.items():
                law[h] = law.get(h, 0) + sigma_dist[s] * p
        for h, p in law.items():
            out[h, b, q] = p
    return out


def natural_indirect(
    joint: JointTable, roles: Mapping[str, str], dag: Dag | None = None
):
    """Indirect effect through background and qualifications:

    sum over (b, q) of E(H | B=b, Q=q, S=1) (P(b, q | S=0) - P(b, q | S=1)).
    """
    nodes = _bound_roles(joint, roles, _HIRING_ROLE_NAMES)
    _check_hiring_shape(dag, nodes)
    h_n, b_n, q_n, s_n = nodes
    if set(support_values(joint, s_n)) != {0, 1}:
        raise InvalidArgumentError(f"{s_n!r} must take both values 0 and 1")
    w0 = restrict(joint, (b_n, q_n), {s_n: 0})
    w1 = restrict(joint, (b_n, q_n), {s_n: 1})
    total = 0
    for key in sorted(set(w0.probs) | set(w1.probs), key=str):
        p0 = w0.probs.get(key, 0)
        p1 = w1.probs.get(key, 0)
        if p0 <= POSITIVITY_CUTOFF and p1 <= POSITIVITY_CUTOFF:
            continue
        b, q = key
        h_mean = _mean(_conditional(joint, h_n, {b_n: b, q_n: q, s_n: 1}))
        if h_mean is None:
            raise InvalidArgumentError(f"{h_n!r} must be numeric")
        total += h_mean * (p0 - p1)
    return total


_IV_ROLE_NAMES = ("I", "T", "R")


def _iv_means_from_joint(joint: JointTable, i_n: str, t_n: str, r_n: str):
    values = support_values(joint, i_n)
    p_i = _conditional(joint, i_n, {})
    t_means = {}
    r_means = {}
    for i in values:
        t_means[i] = _mean(_conditional(joint, t_n, {i_n: i}))
        r_means[i] = _mean(_conditional(joint, r_n, {i_n: i}))
        if t_means[i] is None or r_means[i] is None:
            raise InvalidArgumentError("treatment and response must be numeric")
    return values, p_i, t_means, r_means


def iv_theta(source, roles: Mapping[str, str]) -> IvResult:
    """Instrumental ratio {E(R|I=1)-E(R|I=0)} / {E(T|I=1)-E(T|I=0)}.

    Accepts an exact joint table (expectations computed exactly) or a
    dataset (sample averages).
    """
    for role in _IV_ROLE_NAMES:
        if role not in roles:
            raise InvalidArgumentError(f"missing role binding {role!r}")
    i_n, t_n, r_n = (roles[r] for r in _IV_ROLE_NAMES)
    if isinstance(source, Dataset):
        i = np.asarray(source.column(i_n), dtype=float)
        t = np.asarray(source.column(t_n), dtype=float)
        r = np.asarray(source.column(r_n), dtype=float)
        if not set(np.unique(i)) <= {0.0, 1.0}:
            raise InvalidArgumentError(f"{i_n!r} must take values in {{0, 1}}")
        if not ((i == 0).any() and (i == 1).any()):
            raise InvalidArgumentError("both instrument arms must be present")
        numerator = float(r[i == 1].mean() - r[i == 0].mean())
        denominator = float(t[i == 1].mean() - t[i == 0].mean())
    else:
        _require_nodes(source, (i_n, t_n, r_n))
        _require_binary(source, i_n)
        _require_binary(source, t_n)
        values, _, t_means, r_means = _iv_means_from_joint(source, i_n, t_n, r_n)
        if set(values) != {0, 1}:
            raise InvalidArgumentError("both instrument arms need positive mass")
        numerator = r_means[1] - r_means[0]
        denominator = t_means[1] - t_means[0]
    if abs(float(denominator)) <= _DENOM_FLOOR:
        raise WeakInstrumentError(
            "instrument does not move the treatment (denominator ~ 0)"
        )
    return IvResult(
        theta=numerator / denominator,
        numerator=numerator,
        denominator=denominator,
        valid=True,
    )


def iv_multi(joint: JointTable, roles: Mapping[str, str], i0) -> IvResult:
    """Per-level instrumental ratios against a base level, plus the
    weighted aggregate.

    theta_k = {E(R|I=i_k)-E(R|I=i0)} / {E(T|I=i_k)-E(T|I=i0)}; the weights
    are p_k proportional to P(I=i_k) {E(T|I=i_k)-E(T|I=i0)} and sum to 1.
    """
    for role in _IV_ROLE_NAMES:
        if role not in roles:
            raise InvalidArgumentError(f"missing role binding {role!r}")
    i_n, t_n, r_n = (roles[r] for r in _IV_ROLE_NAMES)
    _require_nodes(joint, (i_n, t_n, r_n))
    values, p_i, t_means, r_means = _iv_means_from_joint(joint, i_n, t_n, r_n)
    if i0 not in values:
        raise InvalidArgumentError(f"base level {i0!r} not in instrument support")
    if i0 != values[0]:
        raise InvalidArgumentError("base level must be the smallest instrument value")
    others = values[1:]
    if not others:
        raise InvalidArgumentError("instrument needs at least two levels")
    thetas = []
    raw = []
    numerator = 0
    for k, ik in enumerate(others, start=1):
        num = r_means[ik] - r_means[i0]
        den = t_means[ik] - t_means[i0]
        if abs(float(den)) <= _DENOM_FLOOR:
            raise WeakInstrumentError(
                f"level {k} ({ik!r}) does not move the treatment"
            )
        thetas.append(num / den)
        raw.append(p_i[ik] * den)
        numerator = numerator + p_i[ik] * num
    denominator = sum(raw)
    if abs(float(denominator)) <= _DENOM_FLOOR:
        raise WeakInstrumentError("aggregate weight denominator ~ 0")
    weights = tuple(w / denominator for w in raw)
    theta = sum(t * w for t, w in zip(thetas, weights))
    return IvResult(
        theta=theta,
        numerator=numerator,
        denominator=denominator,
        valid=True,
        thetas=tuple(thetas),
        weights=weights,
    )


def iv_tsls(dataset: Dataset, roles: Mapping[str, str]) -> IvResult:
    """Covariance-ratio estimator with its two-regression decomposition.

    Returns theta = cov(I, R)/cov(I, T), the first-stage slope
    cov(I, T)/var(I), and the reduced-form slope cov(I, R)/var(I); their
    ratio reproduces theta by construction.  The instrument is centered
    internally.
    """
    for role in _IV_ROLE_NAMES:
        if role not in roles:
            raise InvalidArgumentError(f"missing role binding {role!r}")
    i_n, t_n, r_n = (roles[r] for r in _IV_ROLE_NAMES)
    i = np.asarray(dataset.column(i_n), dtype=float)
    t = np.asarray(dataset.column(t_n), dtype=float)
    r = np.asarray(dataset.column(r_n), dtype=float)
    if len(i) < 2:
        raise InvalidArgumentError("need at least two rows")
    i = i - i.mean()
    cov_it = float(np.mean(i * (t - t.mean())))
    cov_ir = float(np.mean(i * (r - r.mean())))
    var_i = float(np.mean(i * i))
    if abs(cov_it) <= _DENOM_FLOOR:
        raise WeakInstrumentError("sample covariance of instrument and treatment ~ 0")
    return IvResult(
        theta=cov_ir / cov_it,
        numerator=cov_ir,
        denominator=cov_it,
        valid=True,
        first_stage=cov_it / var_i,
        reduced_form=cov_ir / var_i,
    )


def odds_ratio(joint: JointTable, roles: Mapping[str, str]) -> OddsRatioReport:
    """Stratified odds ratio computed by both routes.

    Response route: odds of R=1 under exposure over odds of R=1 without.
    Exposure route: with p = P(T=1|R=1,x) and q = P(T=1|R=0,x),
    e(x) = p(1-q) / (q(1-p)).  Overall measure: E[e(X) | R=1].
    """
    for role in ("R", "T", "X"):
        if role not in roles:
            raise InvalidArgumentError(f"missing role binding {role!r}")
    r_n, t_n, x_n = (roles[r] for r in ("R", "T", "X"))
    _require_nodes(joint, (r_n, t_n, x_n))
    _require_binary(joint, r_n)
    _require_binary(joint, t_n)
    per_x: dict = {}
    for x in support_values(joint, x_n):
        cells = restrict(joint, (r_n, t_n), {x_n: x})
        for r in (0, 1):
            for t in (0, 1):
                if cells.probs.get((r, t), 0) <= POSITIVITY_CUTOFF:
                    raise PositivityError(
                        f"empty cell ({t_n}={t}, {r_n}={r}) in stratum {x_n}={x!r}"
                    )
        r1 = _conditional(joint, r_n, {t_n: 1, x_n: x})[1]
        r0 = _conditional(joint, r_n, {t_n: 0, x_n: x})[1]
        via_response = (r1 / (1 - r1)) / (r0 / (1 - r0))
        p = _conditional(joint, t_n, {r_n: 1, x_n: x})[1]
        q = _conditional(joint, t_n, {r_n: 0, x_n: x})[1]
        via_exposure = (p * (1 - q)) / (q * (1 - p))
        per_x[x] = {
            "p": p,
            "q": q,
            "ratio_response_odds": via_response,
            "ratio_exposure_odds": via_exposure,
        }
    case_x = _conditional(joint, x_n, {r_n: 1})
    overall = sum(
        per_x[x]["ratio_exposure_odds"] * case_x.get(x, 0) for x in per_x
    )
    return OddsRatioReport(per_x=per_x, overall=float(overall))
