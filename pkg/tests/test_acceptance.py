"""Acceptance gate: the quantitative criteria, each at its pinned tolerance.

Every test prints one PASS/FAIL line (run with ``pytest -s`` to stream them).
Criteria are evaluated through the same experiment runners the CLI exposes,
so a green suite certifies the user-facing surface, not a parallel code path.
"""

import math
import os

import numpy as np
import pytest

from levyflow.config import parse_config
from levyflow.experiments import run_experiment
from levyflow.report import csv_body_digest, write_record

SEED = 20240811


def _report(num, label, passed, detail=""):
    line = f"ACCEPTANCE {num}: {'PASS' if passed else 'FAIL'} - {label}"
    if detail:
        line += f" [{detail}]"
    print(line, flush=True)
    assert passed, line


def _rows(rec):
    return {r.name: r for r in rec.rows}


def _cfg(kind, **sections):
    raw = {"experiment": kind, "seed": {"master_seed": SEED}}
    raw.update(sections)
    return parse_config(raw)


# -- criterion 1: sampler fidelity -------------------------------------------

SAMPLE_MATRIX = {
    "cauchy": {"family": "isotropic_stable", "alpha": 1.0, "dim": 1},
    "iso15": {"family": "isotropic_stable", "alpha": 1.5, "dim": 1},
    "relativistic": {"family": "relativistic_stable", "alpha": 1.2, "m": 1.0},
    "cyl_super": {"family": "cylindrical_stable", "blocks": [[0.9, 1], [1.0, 1]]},
    "cyl_sub": {"family": "cylindrical_stable", "blocks": [[1.2, 1], [1.8, 1]]},
    "stable_type": {"family": "stable_type",
                    "kappa": {"kind": "sum_of_powers",
                              "terms": [[1.0, 1.2, False], [0.5, 1.5, True]]}},
    "truncated": {"family": "truncated_stable", "alpha": 1.0},
}


@pytest.fixture(scope="module")
def sample_records():
    out = {}
    for name, model in SAMPLE_MATRIX.items():
        cfg = _cfg("sample", model=model,
                   numerics={"n_samples": 100_000, "r0_override": 0.1})
        out[name] = run_experiment(cfg)
    return out


def test_criterion_1_sampler_fidelity(sample_records):
    ks = _rows(sample_records["cauchy"]).get("ks_pvalue_cauchy")
    ks_ok = ks is not None and ks.passed
    cf_ok = all(rec.passed for rec in sample_records.values())
    detail = f"KS p={ks.value:.3f}; CF rows over {len(sample_records)} models"
    _report(1, "subordinate-BM Cauchy KS at level 0.01 and 3-SE CF matrix",
            ks_ok and cf_ok, detail)


# -- criterion 2: negative-moment law ----------------------------------------


@pytest.fixture(scope="module")
def negmoment_record():
    return run_experiment(_cfg(
        "negmoment",
        numerics={"rho": 0.5, "p_values": [0.3, 0.5], "n_samples": 200_000,
                  "t_min_exp": 0, "t_max_exp": 7},
    ))


def test_criterion_2_negative_moments(negmoment_record):
    rows = _rows(negmoment_record)
    slopes = [rows[k] for k in rows if k.endswith("_slope")]
    detail = ", ".join(f"{r.name.split('_')[1]}: {r.value:.4f} vs {r.oracle:.2f}"
                       for r in slopes)
    _report(2, "E S_t^-p matches quadrature oracle within 3 SE, slope -2p/alpha "
               "within 0.05", negmoment_record.passed, detail)


# -- criterion 3: gradient-semigroup scaling ---------------------------------


@pytest.fixture(scope="module")
def scaling_records():
    out = {}
    for key, model, fdata, n in (
        ("subbm_b05", {"family": "isotropic_stable", "alpha": 1.0, "dim": 1},
         {"kind": "capped_power", "beta": 0.5}, 100_000),
        ("subbm_b10", {"family": "isotropic_stable", "alpha": 1.0, "dim": 1},
         {"kind": "capped_power", "beta": 1.0}, 100_000),
        ("cylindrical", {"family": "cylindrical_stable",
                         "blocks": [[0.9, 1], [1.0, 1]]},
         {"kind": "capped_power", "beta": 0.8, "center": [0.0, 0.0]}, 30_000),
    ):
        cfg = _cfg("semigroup-scaling", model=model, function=fdata,
                   numerics={"n_samples": n, "t_min_exp": 1,
                             "t_max_exp": 11 if key == "cylindrical" else 10})
        out[key] = run_experiment(cfg)
    return out


def test_criterion_3_gradient_scaling(scaling_records):
    details = []
    ok = True
    for key, rec in scaling_records.items():
        row = _rows(rec)["gradient_scaling_slope"]
        details.append(f"{key}: {row.value:.3f} vs {row.oracle:.3f}")
        ok = ok and row.passed
    _report(3, "gradient-norm decay exponents within 0.1",
            ok, "; ".join(details))


# -- criterion 4: Holder characterisation and commutator ---------------------


@pytest.fixture(scope="module")
def holder_record():
    return run_experiment(_cfg("holder", numerics={"beta_values": [0.3, 0.5]}))


def test_criterion_4_holder(holder_record):
    rows = _rows(holder_record)
    detail = (f"slopes {rows['seminorm_slope_beta0.3'].value:.3f}/"
              f"{rows['seminorm_slope_beta0.5'].value:.3f}, commutator "
              f"{rows['commutator_slope'].value:.3f}, FD rel err "
              f"{rows['poisson_derivative_fd_rel_err'].value:.1e}")
    _report(4, "seminorm slopes beta-1 within 0.1; commutator scaling; "
               "derivative-FD 1e-5", holder_record.passed, detail)


# -- criterion 5: mild PDE solver --------------------------------------------


@pytest.fixture(scope="module")
def pde_record():
    return run_experiment(_cfg(
        "pde",
        model={"family": "isotropic_stable", "alpha": 1.5, "dim": 1},
        drift={"kind": "capped_power", "beta": 0.7},
        numerics={"half_period": 8.0 * math.pi, "n_x": 2048, "n_steps": 256},
    ))


def test_criterion_5_mild_pde(pde_record):
    rows = _rows(pde_record)
    detail = (f"closed-form err {rows['closed_form_error'].value:.2e}, weak "
              f"residual {rows['weak_residual_closed_form'].value:.2e}, "
              f"refinement x{rows['weak_residual_refinement_ratio'].value:.1f}")
    _report(5, "closed form within 1e-4; max principle; residual halves under "
               "refinement", pde_record.passed, detail)


# -- criterion 6: Zvonkin contraction and structure --------------------------


@pytest.fixture(scope="module")
def zvonkin_record():
    return run_experiment(_cfg(
        "zvonkin-flow",
        model={"family": "isotropic_stable", "alpha": 1.5, "dim": 1},
        drift={"kind": "capped_power", "beta": 0.7, "amplitude": 1.0},
        numerics={"gamma": 0.15, "half_period": 32.0, "n_x": 8192,
                  "n_steps": 256, "n_replicas": 1000},
    ))


def test_criterion_6_zvonkin_structure(zvonkin_record):
    rows = _rows(zvonkin_record)
    structural = ["contraction_norm", "sandwich_lower", "sandwich_upper",
                  "jump_map_bound", "jump_gradient_bound_ratio",
                  "threshold_rule_margin", "inverse_round_trip"]
    ok = all(rows[k].passed for k in structural)
    detail = (f"||grad u||+[grad u] = {rows['contraction_norm'].value:.3f}, "
              f"sandwich [{rows['sandwich_lower'].value:.2f}, "
              f"{rows['sandwich_upper'].value:.2f}], rule margin "
              f"{rows['threshold_rule_margin'].value:.3f} < 1")
    _report(6, "(1.5, 0.7, 0.15): contraction <= 1/2, bi-Lipschitz sandwich, "
               "jump-map bounds, threshold rule", ok, detail)


# -- criterion 7: flow moments and uniqueness proxy --------------------------


@pytest.fixture(scope="module")
def uniqueness_record():
    return run_experiment(_cfg(
        "uniqueness",
        model={"family": "isotropic_stable", "alpha": 1.5, "dim": 1},
        drift={"kind": "capped_power", "beta": 0.7, "amplitude": 1.0},
        numerics={"gamma": 0.15, "half_period": 32.0, "n_x": 8192,
                  "n_steps": 256, "n_replicas": 1000,
                  "levels": [4, 8, 16, 32], "x": 0.3},
    ))


def test_criterion_7_flow_and_uniqueness(uniqueness_record, zvonkin_record):
    rows = _rows(uniqueness_record)
    zrows = _rows(zvonkin_record)
    ladder_ok = (rows["D_strictly_decreasing"].passed
                 and rows["G_strictly_decreasing"].passed
                 and rows["D_final_vs_half_initial"].passed)
    moments_ok = (zrows["grad_moment_p2_doubling_ratio"].passed
                  and zrows["grad_moment_p4_doubling_ratio"].passed
                  and zrows["escape_fraction"].passed)
    detail = (f"D: {rows['D_4'].value:.2e} > {rows['D_8'].value:.2e} > "
              f"{rows['D_16'].value:.2e} > {rows['D_32'].value:.2e}; moment "
              f"ratios {zrows['grad_moment_p2_doubling_ratio'].value:.2f}/"
              f"{zrows['grad_moment_p4_doubling_ratio'].value:.2f}")
    _report(7, "mollification ladder strictly decreasing with 2x final gain; "
               "grad-flow moments stable", ladder_ok and moments_ok, detail)


# -- criterion 8: derivative formula -----------------------------------------


@pytest.fixture(scope="module")
def bismut_zero_record():
    return run_experiment(_cfg(
        "bismut",
        model={"family": "isotropic_stable", "alpha": 1.0, "dim": 1},
        drift={"kind": "zero"},
        function={"kind": "sinusoid", "freq": [1.0]},
        numerics={"n_replicas": 20_000, "t_values": [0.25, 0.5, 1.0], "x": 0.0,
                  "half_period": 128.0, "n_x": 4096, "n_steps": 256,
                  "gamma": 0.3},
    ))


@pytest.fixture(scope="module")
def bismut_drift_record():
    return run_experiment(_cfg(
        "bismut",
        model={"family": "isotropic_stable", "alpha": 1.5, "dim": 1},
        drift={"kind": "capped_power", "beta": 0.7, "amplitude": 1.0},
        function={"kind": "sinusoid", "freq": [1.0]},
        numerics={"n_replicas": 20_000, "t_values": [0.25, 0.5, 1.0], "x": 0.3,
                  "half_period": 32.0, "n_x": 8192, "n_steps": 256,
                  "gamma": 0.15, "fd_step": 1e-3},
    ))


@pytest.fixture(scope="module")
def decay_record():
    return run_experiment(_cfg(
        "decay",
        model={"family": "isotropic_stable", "alpha": 1.0, "dim": 1},
        drift={"kind": "zero"},
        function={"kind": "smoothed_indicator", "center": [0.15],
                  "radius": 0.02, "width": 0.05},
        numerics={"n_replicas": 16_000, "t_min_exp": 0, "t_max_exp": 7,
                  "x": 0.0, "n_steps": 1024, "gamma": 0.3},
    ))


@pytest.fixture(scope="module")
def decay_drift_record():
    return run_experiment(_cfg(
        "decay",
        model={"family": "isotropic_stable", "alpha": 1.5, "dim": 1},
        drift={"kind": "capped_power", "beta": 0.7, "amplitude": 1.0},
        function={"kind": "smoothed_indicator", "center": [0.45],
                  "radius": 0.02, "width": 0.05},
        numerics={"n_replicas": 12_000, "t_min_exp": 0, "t_max_exp": 7,
                  "x": 0.3, "n_steps": 1024, "gamma": 0.15,
                  "half_period": 32.0, "n_x": 8192},
    ))


def test_criterion_8_bismut(bismut_zero_record, bismut_drift_record,
                            decay_record, decay_drift_record):
    zero_rows = _rows(bismut_zero_record)
    detail_zero = ", ".join(f"t={k.split('_t')[1]}: {r.value:.3f} vs {r.oracle:.3f}"
                            for k, r in zero_rows.items())
    decay_row = _rows(decay_record)["decay_slope"]
    decay_drift_row = _rows(decay_drift_record)["decay_slope"]
    ok = (bismut_zero_record.passed and bismut_drift_record.passed
          and decay_record.passed and decay_drift_record.passed)
    detail = (f"{detail_zero}; drifted-vs-FD all within 3 SE; decay slopes "
              f"{decay_row.value:.3f} >= {decay_row.oracle:.2f} and "
              f"{decay_drift_row.value:.3f} >= {decay_drift_row.oracle:.3f}")
    _report(8, "zero-drift Cauchy oracle, drifted Bismut-vs-FD, decay law",
            ok, detail)


# -- criterion 9: determinism ------------------------------------------------


def test_criterion_9_determinism(tmp_path, negmoment_record):
    digests = {}
    for tag in ("a", "b"):
        cfg1 = _cfg("sample", model=SAMPLE_MATRIX["cauchy"],
                    numerics={"n_samples": 50_000, "r0_override": 0.1})
        cfg2 = _cfg("negmoment",
                    numerics={"rho": 0.5, "p_values": [0.3], "n_samples": 50_000,
                              "t_min_exp": 0, "t_max_exp": 7})
        paths = []
        for cfg in (cfg1, cfg2):
            base = write_record(run_experiment(cfg), str(tmp_path / tag))
            paths.append(os.path.join(base, "metrics.csv"))
        digests[tag] = [csv_body_digest(p) for p in paths]
    ok = digests["a"] == digests["b"]
    _report(9, "re-run with the same master seed reproduces byte-identical "
               "CSV bodies", ok, f"digests {digests['a'][0][:12]}.., "
                                 f"{digests['a'][1][:12]}..")
