"""Full-chain Monte Carlo oracle for the closed-form SINDRs.

Simulates pilots -> ADC quantization -> channel estimation -> MRC/MRT ->
data-phase quantization -> reception, accumulates the expectation terms of
the general SINDR ratios, and compares the resulting empirical SINDRs with
the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from quantmimo import rates
from quantmimo.airlink import complex_gaussian, dft_pilots
from quantmimo.bussgang import (
    DEFAULT_TRIALS,
    PHASE_CE,
    PHASE_DL,
    PHASE_UL,
    assemble_stats,
    chunk_rng,
    gain_scalar,
    _chunks,
)
from quantmimo.quant import design_lloyd_max, quantize, rescale_labels


@dataclass
class _Accumulator:
    """Streaming mean with per-chunk partial sums reduced by math.fsum.

    Chunk partials are kept and combined in a fixed order at the end, so the
    result is independent of how chunks were scheduled; fsum keeps the
    10^6-term reductions exactly rounded.
    """

    shape: tuple
    _partials: list = field(default_factory=list)
    _count: int = 0

    def add(self, chunk_sum, count):
        self._partials.append(np.asarray(chunk_sum))
        self._count += count

    def mean(self):
        stacked = np.stack(self._partials)
        flat = stacked.reshape(len(self._partials), -1)
        if np.iscomplexobj(stacked):
            out = np.array(
                [complex(math.fsum(flat[:, i].real), math.fsum(flat[:, i].imag)) for i in range(flat.shape[1])]
            )
        else:
            out = np.array([math.fsum(flat[:, i]) for i in range(flat.shape[1])])
        return (out / self._count).reshape(self.shape)


@dataclass(frozen=True)
class ValidationReport:
    """Closed-form vs empirical comparison for one configuration."""

    direction: str
    trials: int
    seed: int
    tolerance: float
    sindr_closed: np.ndarray
    sindr_empirical: np.ndarray
    sindr_rel_error: np.ndarray
    moment_errors: dict
    bussgang_residual: dict      # phase -> (|mean d conj(y)|, MC standard error)
    offdiag_max: float | None
    offdiag_sigma: float | None
    delta_closed: float | None
    delta_empirical: float | None
    passed: bool

    def to_text(self):
        lines = [
            f"direction {self.direction}",
            f"trials {self.trials}",
            f"seed {self.seed}",
            f"tolerance {self.tolerance:.6g}",
            f"passed {int(self.passed)}",
        ]
        for k in range(len(self.sindr_closed)):
            lines.append(f"sindr_closed_{k} {self.sindr_closed[k]:.9g}")
            lines.append(f"sindr_empirical_{k} {self.sindr_empirical[k]:.9g}")
            lines.append(f"sindr_rel_error_{k} {self.sindr_rel_error[k]:.6g}")
        for name, (value, err) in self.moment_errors.items():
            lines.append(f"moment_{name} {value:.9g} rel_error {err:.6g}")
        for phase, (mag, sigma) in self.bussgang_residual.items():
            lines.append(f"residual_{phase} {mag:.6g} sigma {sigma:.6g}")
        if self.offdiag_max is not None:
            lines.append(f"offdiag_max {self.offdiag_max:.6g} sigma {self.offdiag_sigma:.6g}")
        if self.delta_closed is not None:
            lines.append(f"delta_closed {self.delta_closed:.9g}")
            lines.append(f"delta_empirical {self.delta_empirical:.9g}")
        worst = int(np.argmax(self.sindr_rel_error))
        lines.append(f"worst_term sindr_ue_{worst} rel_error {self.sindr_rel_error[worst]:.6g}")
        return "\n".join(lines)


def default_specs(config):
    """Design and rescale the CE/UL ADC and DL DAC quantizers for a scenario."""
    y_var = config.y_var_ul
    w_var = config.w_var_dl
    adc = rescale_labels(design_lloyd_max(config.bits, np.sqrt(y_var / 2.0)), y_var)
    dac = rescale_labels(design_lloyd_max(config.bits, np.sqrt(w_var / 2.0)), w_var)
    return adc, adc, dac  # ce, ul, dl


def _estimate_and_combine(config, spec_ce, rng, size, pilots, g_ce):
    """Draw one chunk of channels and produce quantized channel estimates."""
    m, k, tau = config.m_ul, config.k_users, config.tau
    rho = config.rho_bs
    h = complex_gaussian(rng, (size, m, k))
    z_ce = complex_gaussian(rng, (size, m, tau))
    y_ce = np.sqrt(rho) * h @ pilots.entries.conj().T + z_ce
    r_ce = quantize(spec_ce, y_ce)
    h_hat = r_ce @ pilots.entries / (np.sqrt(rho) * tau)
    d_ce = r_ce - g_ce * y_ce
    return h, y_ce, d_ce, h_hat


def run_ul_trial(config, specs, seed):
    """One uplink trial's contributions to the moment set (diagnostic path).

    Returns a dict keyed by moment name; the batch runner accumulates the
    same quantities chunk-wise.  Bit-identical for identical seeds.
    """
    spec_ce, spec_ul, _ = specs
    pilots = dft_pilots(config.tau, config.k_users)
    g_ce = gain_scalar(spec_ce, config.y_var_ul)
    g_ul = gain_scalar(spec_ul, config.y_var_ul)
    rng = chunk_rng(seed, PHASE_UL, 0)
    h, _, _, h_hat = _estimate_and_combine(config, spec_ce, rng, 1, pilots, g_ce)
    x = complex_gaussian(rng, (1, config.k_users))
    z_ul = complex_gaussian(rng, (1, config.m_ul))
    y_ul = np.sqrt(config.rho_bs) * np.einsum("cmk,ck->cm", h, x) + z_ul
    d_ul = quantize(spec_ul, y_ul) - g_ul * y_ul
    v = g_ul * h_hat
    cross = g_ul * np.einsum("cmk,cmi->cki", v.conj(), h)
    return {
        "desired_mean": np.diagonal(cross[0]).copy(),
        "signal_powers": np.abs(cross[0]) ** 2,
        "combiner_power": g_ul**2 * np.sum(np.abs(v[0]) ** 2, axis=0),
        "distortion_power": np.abs(np.einsum("cmk,cm->ck", v.conj(), d_ul)[0]) ** 2,
    }


def run_dl_trial(config, specs, seed, delta):
    """One downlink trial's contributions to the moment set (diagnostic path)."""
    spec_ce, _, spec_dl = specs
    pilots = dft_pilots(config.tau, config.k_users)
    g_ce = gain_scalar(spec_ce, config.y_var_ul)
    g_dl = gain_scalar(spec_dl, config.w_var_dl)
    rng = chunk_rng(seed, PHASE_DL, 0)
    h, _, _, h_hat = _estimate_and_combine(config, spec_ce, rng, 1, pilots, g_ce)
    w = h_hat / np.sqrt(delta)
    x = complex_gaussian(rng, (1, config.k_users))
    u = np.einsum("cmk,ck->cm", w, x)
    d_dl = quantize(spec_dl, u) - g_dl * u
    cross = g_dl * np.einsum("cmk,cmi->cki", h.conj(), w)
    return {
        "desired_mean": np.diagonal(cross[0]).copy(),
        "signal_powers": np.abs(cross[0]) ** 2,
        "distortion_power": np.abs(np.einsum("cmk,cm->ck", h.conj(), d_dl)[0]) ** 2,
        "precoder_frobenius": np.sum(np.abs(w[0]) ** 2),
    }


def validate_closed_form(
    config,
    trials=DEFAULT_TRIALS,
    seed=0,
    tolerance=0.05,
    direction="both",
    specs=None,
    stats=None,
    track_offdiag=False,
):
    """Compare the closed-form SINDRs against the full-chain empirical ones.

    Returns one ValidationReport per requested direction.  A tolerance
    violation yields passed=False in the report, not an exception.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if config.m_ul != config.m_dl:
        raise ValueError("validator expects a common antenna count for both directions")
    if specs is None:
        specs = default_specs(config)
    spec_ce, spec_ul, spec_dl = specs
    if stats is None:
        stats = assemble_stats(config, spec_ce, spec_ul, spec_dl, trials=max(trials, 10_000), seed=seed)
    pilots = dft_pilots(config.tau, config.k_users)
    m, k, tau = config.m_ul, config.k_users, config.tau
    rho = config.rho_bs
    g_ce, g_ul, g_dl = stats.g_ce, stats.g_ul, stats.g_dl

    reports = {}
    directions = ["ul", "dl"] if direction == "both" else [direction]

    do_ul = "ul" in directions
    do_dl = "dl" in directions

    desired_ul = _Accumulator((k,))
    signal_ul = _Accumulator((k, k))
    combiner_ul = _Accumulator((k,))
    dist_ul = _Accumulator((k,))
    resid_ce = _Accumulator(())
    resid_ce_sq = _Accumulator(())
    resid_ul = _Accumulator(())
    resid_ul_sq = _Accumulator(())
    resid_dl = _Accumulator(())
    resid_dl_sq = _Accumulator(())
    delta_emp = _Accumulator(())
    desired_dl = _Accumulator((k,))
    signal_dl = _Accumulator((k, k))
    dist_dl = _Accumulator((k,))
    frob_dl = _Accumulator(())
    wdiag_dl = _Accumulator((m,))
    offdiag = _Accumulator((m, m)) if track_offdiag else None
    offdiag_sq = _Accumulator(()) if track_offdiag else None

    for chunk, size in _chunks(trials):
        rng = chunk_rng(seed, PHASE_CE, chunk)
        h, y_ce, d_ce, h_hat = _estimate_and_combine(config, spec_ce, rng, size, pilots, g_ce)
        ry = d_ce * y_ce.conj()
        resid_ce.add(np.sum(ry), size * m * tau)
        resid_ce_sq.add(np.sum(np.abs(ry) ** 2), size * m * tau)
        delta_emp.add(np.sum(np.abs(h_hat) ** 2), size)

        if do_ul:
            x = complex_gaussian(rng, (size, k))
            z_ul = complex_gaussian(rng, (size, m))
            y_ul = np.sqrt(rho) * np.einsum("cmk,ck->cm", h, x) + z_ul
            d_ul = quantize(spec_ul, y_ul) - g_ul * y_ul
            ry = d_ul * y_ul.conj()
            resid_ul.add(np.sum(ry), size * m)
            resid_ul_sq.add(np.sum(np.abs(ry) ** 2), size * m)
            v = g_ul * h_hat
            cross = g_ul * np.einsum("cmk,cmi->cki", v.conj(), h)
            desired_ul.add(np.einsum("ckk->k", cross), size)
            signal_ul.add(np.sum(np.abs(cross) ** 2, axis=0), size)
            combiner_ul.add(g_ul**2 * np.sum(np.abs(v) ** 2, axis=(0, 1)), size)
            dist_ul.add(np.sum(np.abs(np.einsum("cmk,cm->ck", v.conj(), d_ul)) ** 2, axis=0), size)
            if track_offdiag:
                offdiag.add(np.einsum("cm,cn->mn", d_ul, d_ul.conj()), size)
                offdiag_sq.add(np.sum(np.abs(d_ul[:, 0] * d_ul[:, 1].conj()) ** 2), size)

        if do_dl:
            w = h_hat / np.sqrt(stats.delta)
            x = complex_gaussian(rng, (size, k))
            u = np.einsum("cmk,ck->cm", w, x)
            d_dl = quantize(spec_dl, u) - g_dl * u
            ry = d_dl * u.conj()
            resid_dl.add(np.sum(ry), size * m)
            resid_dl_sq.add(np.sum(np.abs(ry) ** 2), size * m)
            cross = g_dl * np.einsum("cmk,cmi->cki", h.conj(), w)
            desired_dl.add(np.einsum("ckk->k", cross), size)
            signal_dl.add(np.sum(np.abs(cross) ** 2, axis=0), size)
            # E[h^H C_d h] has the unconditional distortion covariance, so the
            # channel is paired with another trial's distortion sample
            d_dec = np.roll(d_dl, 1, axis=0)
            dist_dl.add(np.sum(np.abs(np.einsum("cmk,cm->ck", h.conj(), d_dec)) ** 2, axis=0), size)
            frob_dl.add(np.sum(np.abs(w) ** 2), size)
            wdiag_dl.add(np.sum(np.abs(w) ** 2, axis=(0, 2)), size)

    def residual_stats(acc, acc_sq, n_samples):
        mean = acc.mean()
        second = acc_sq.mean()
        var = max(float(second - abs(mean) ** 2), 0.0)
        return abs(complex(mean)), np.sqrt(var / n_samples)

    residuals = {"ce": residual_stats(resid_ce, resid_ce_sq, trials * m * tau)}

    ce_noise = 1.0 + 1.0 / (rho * tau)
    inv_rt2 = 1.0 / (rho * tau**2)

    if do_ul:
        residuals["ul"] = residual_stats(resid_ul, resid_ul_sq, trials * m)
        a_k = stats.a_k_at(m)
        closed_desired = g_ce * g_ul**2 * m
        closed_cross = ce_noise * g_ce**2 * g_ul**4 * m + inv_rt2 * g_ul**4 * a_k
        closed_self = (m + 1.0 + 1.0 / (rho * tau)) * g_ce**2 * g_ul**4 * m + inv_rt2 * g_ul**4 * a_k
        closed_combiner = closed_cross
        closed_dist = ce_noise * g_ce**2 * g_ul**2 * stats.trace_cd_ul + inv_rt2 * g_ul**2 * stats.b_k * (m / stats.m_ul)

        des = desired_ul.mean()
        sig = signal_ul.mean()
        comb = combiner_ul.mean()
        dst = dist_ul.mean()
        emp = np.array(
            [
                rates.sindr_from_moments(
                    rates.UplinkMoments(
                        rho_bs=rho,
                        desired_mean=des[kk],
                        signal_powers=sig[kk],
                        combiner_power=comb[kk],
                        distortion_power=dst[kk],
                    )
                )
                for kk in range(k)
            ]
        )
        closed = np.array(
            [rates.sindr_ul_mrc(rates.SindrInputsUL(m, k, tau, rho, stats), ue=kk) for kk in range(k)]
        )
        rel = np.abs(emp - closed) / emp
        moment_errors = {
            "desired_mean": (float(np.mean(des.real)), float(abs(np.mean(des) - closed_desired) / closed_desired)),
            "cross_power": (
                float(np.mean(sig[~np.eye(k, dtype=bool)])),
                float(abs(np.mean(sig[~np.eye(k, dtype=bool)]) - np.mean(closed_cross)) / np.mean(closed_cross)),
            ),
            "self_power": (
                float(np.mean(np.diagonal(sig))),
                float(abs(np.mean(np.diagonal(sig)) - np.mean(closed_self)) / np.mean(closed_self)),
            ),
            "combiner_power": (float(np.mean(comb)), float(abs(np.mean(comb) - np.mean(closed_combiner)) / np.mean(closed_combiner))),
            "distortion_power": (float(np.mean(dst)), float(abs(np.mean(dst) - np.mean(closed_dist)) / np.mean(closed_dist))),
        }
        off_max = off_sigma = None
        if track_offdiag:
            cd = offdiag.mean()
            mask = ~np.eye(m, dtype=bool)
            off_max = float(np.max(np.abs(cd[mask])))
            second = float(offdiag_sq.mean())
            off_sigma = np.sqrt(max(second, 0.0) / trials)
        reports["ul"] = ValidationReport(
            direction="ul",
            trials=trials,
            seed=seed,
            tolerance=tolerance,
            sindr_closed=closed,
            sindr_empirical=emp,
            sindr_rel_error=rel,
            moment_errors=moment_errors,
            bussgang_residual={p: residuals[p] for p in ("ce", "ul")},
            offdiag_max=off_max,
            offdiag_sigma=off_sigma,
            delta_closed=stats.delta,
            delta_empirical=float(delta_emp.mean()),
            passed=bool(np.all(rel <= tolerance)),
        )

    if do_dl:
        residuals["dl"] = residual_stats(resid_dl, resid_dl_sq, trials * m)
        a_k = stats.a_k_at(m)
        closed_desired = g_ce * g_dl * m / np.sqrt(stats.delta)
        closed_cross = (ce_noise * g_ce**2 * g_dl**2 * m + inv_rt2 * g_dl**2 * a_k) / stats.delta
        closed_dist = stats.trace_cd_dl
        des = desired_dl.mean()
        sig = signal_dl.mean()
        dst = dist_dl.mean()
        emp = np.array(
            [
                rates.sindr_from_moments(
                    rates.DownlinkMoments(
                        rho_ue=config.rho_ue,
                        desired_mean=des[kk],
                        signal_powers=sig[kk],
                        distortion_power=dst[kk],
                    )
                )
                for kk in range(k)
            ]
        )
        closed = np.array(
            [
                rates.sindr_dl_mrt(
                    rates.SindrInputsDL(m, k, tau, rho, config.rho_ue, stats), ue=kk
                )
                for kk in range(k)
            ]
        )
        rel = np.abs(emp - closed) / emp
        moment_errors = {
            "desired_mean": (float(np.mean(des.real)), float(abs(np.mean(des) - closed_desired) / closed_desired)),
            "cross_power": (
                float(np.mean(sig[~np.eye(k, dtype=bool)])),
                float(abs(np.mean(sig[~np.eye(k, dtype=bool)]) - np.mean(closed_cross)) / np.mean(closed_cross)),
            ),
            "distortion_power": (float(np.mean(dst)), float(abs(np.mean(dst) - closed_dist) / closed_dist)),
            "precoder_frobenius": (float(frob_dl.mean()), float(abs(frob_dl.mean() - 1.0))),
            "precoder_diag": (
                float(np.mean(wdiag_dl.mean())),
                float(abs(np.mean(wdiag_dl.mean()) - 1.0 / m) * m),
            ),
        }
        reports["dl"] = ValidationReport(
            direction="dl",
            trials=trials,
            seed=seed,
            tolerance=tolerance,
            sindr_closed=closed,
            sindr_empirical=emp,
            sindr_rel_error=rel,
            moment_errors=moment_errors,
            bussgang_residual={p: residuals[p] for p in ("ce", "dl")},
            offdiag_max=None,
            offdiag_sigma=None,
            delta_closed=stats.delta,
            delta_empirical=float(delta_emp.mean()),
            passed=bool(np.all(rel <= tolerance)),
        )

    if direction == "both":
        return reports
    return reports[direction]
