"""Compiled inner loops for the branching particle system.

Two law-equivalent drivers share the per-step branching scheme (move by a
Gaussian increment, then branch with probability q = 1 - exp(-N dt), half
deaths and half binary splits, children copying the post-move position):

- a stepwise driver that walks every dt step and feeds trapezoid
  accumulators for registered occupation observables;
- an event-jump driver for runs with no occupation observables and no
  snapshots, which draws each particle's geometric lifetime directly and
  aggregates the Gaussian displacement over it.  Composing the per-step
  increments over a lifetime is exact, so the law of the terminal cloud is
  identical to the stepwise driver's.

Randomness is numba's per-thread MT19937 stream, seeded once per replica;
draw order is fixed by particle array order, never by scheduling.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# observable kind codes shared with simulate.py
KIND_CONSTANT = 0
KIND_GAUSSIAN = 1
KIND_INVERSE_DISTANCE = 2
KIND_LOG_DISTANCE = 3
KIND_HEAT_PROBE = 4
KIND_INVERSE_SQUARE = 5

_DIST2_FLOOR = 1e-24  # (distance floor 1e-12)^2


@njit(cache=True)
def seed_stream(seed):
    np.random.seed(seed)


@njit(cache=True)
def _grow(pos, count, d, new_cap):
    out = np.empty((new_cap, d), dtype=np.float64)
    for i in range(count):
        for j in range(d):
            out[i, j] = pos[i, j]
    return out


@njit(cache=True)
def _eval_sum(pos, count, d, kind, anchor, p1, p2, clamps):
    """Sum of phi over particles; returns (sum, clamp increments)."""
    s = 0.0
    hit = 0
    for i in range(count):
        dist2 = 0.0
        for j in range(d):
            diff = pos[i, j] - anchor[j]
            dist2 += diff * diff
        if kind == KIND_CONSTANT:
            s += p1
            continue
        if kind == KIND_GAUSSIAN:
            s += np.exp(-dist2 * p1)
            continue
        if kind == KIND_HEAT_PROBE:
            s += p2 * np.exp(-dist2 * p1)
            continue
        if dist2 < _DIST2_FLOOR:
            dist2 = _DIST2_FLOOR
            hit += 1
        if kind == KIND_INVERSE_DISTANCE:
            s += p1 / np.sqrt(dist2)
        elif kind == KIND_LOG_DISTANCE:
            s += 0.5 * np.log(dist2)
        else:  # KIND_INVERSE_SQUARE
            s += 1.0 / dist2
    return s, clamps + hit


@njit(cache=True)
def run_steps(
    pos,
    buf,
    count,
    d,
    dt,
    q,
    n_steps,
    step_offset,
    inv_n,
    kinds,
    anchors,
    p1,
    p2,
    occ_flags,
    occ_acc,
    prev_vals,
    clamp_counts,
):
    """Advance up to n_steps; returns (pos, buf, count, steps_done, extinct).

    Occupation accumulators advance by the trapezoid rule on end-of-step
    values; prev_vals must hold the observable values for the state at
    step_offset on entry and are updated in place.
    """
    sq_dt = np.sqrt(dt)
    half_q = 0.5 * q
    n_obs = kinds.shape[0]
    extinct = False
    done = 0
    for k in range(n_steps):
        # move
        for i in range(count):
            for j in range(d):
                pos[i, j] += sq_dt * np.random.standard_normal()
        # branch into buf
        if 2 * count > buf.shape[0]:
            buf = _grow(buf, 0, d, max(2 * buf.shape[0], 2 * count + 64))
        nc = 0
        for i in range(count):
            u = np.random.random()
            if u < half_q:
                continue
            if u < q:
                for j in range(d):
                    buf[nc, j] = pos[i, j]
                nc += 1
                for j in range(d):
                    buf[nc, j] = pos[i, j]
                nc += 1
            else:
                for j in range(d):
                    buf[nc, j] = pos[i, j]
                nc += 1
        pos, buf = buf, pos
        count = nc
        # occupation accumulators on the end-of-step state
        for m in range(n_obs):
            if occ_flags[m]:
                s, clamp_counts[m] = _eval_sum(
                    pos, count, d, kinds[m], anchors[m], p1[m], p2[m], clamp_counts[m]
                )
                cur = s * inv_n
                occ_acc[m] += 0.5 * dt * (prev_vals[m] + cur)
                prev_vals[m] = cur
        done = k + 1
        if count == 0:
            extinct = True
            break
    return pos, buf, count, done, extinct


@njit(cache=True)
def run_event_jump(d, n_init, dt, q, n_steps):
    """Terminal cloud via geometric lifetimes; no occupation support.

    Per particle, in array order: one uniform for the lifetime; if the
    branch event falls beyond the horizon, d normals for the aggregated
    move to the horizon; otherwise one uniform for the death/split coin
    and, on a split, d normals for the move to the event.

    Returns (terminal positions, count, last event step).
    """
    log_keep = np.log1p(-q)
    cap = 4 * n_init + 64
    pos = np.zeros((cap, d), dtype=np.float64)
    birth = np.zeros(cap, dtype=np.int64)
    count = n_init

    out_cap = 2 * n_init + 64
    out = np.empty((out_cap, d), dtype=np.float64)
    out_n = 0
    last_event = 0

    nxt = np.empty((cap, d), dtype=np.float64)
    nxt_birth = np.empty(cap, dtype=np.int64)

    while count > 0:
        if 2 * count > nxt.shape[0]:
            new_cap = 2 * count + 64
            nxt = np.empty((new_cap, d), dtype=np.float64)
            nxt_birth = np.empty(new_cap, dtype=np.int64)
        nc = 0
        for i in range(count):
            u = np.random.random()
            if u <= 0.0:
                u = 1e-300
            life = 1 + np.int64(np.floor(np.log(u) / log_keep))
            event_step = birth[i] + life
            if event_step > n_steps:
                # survives to the horizon
                if out_n >= out.shape[0]:
                    grown = np.empty((2 * out.shape[0], d), dtype=np.float64)
                    for a in range(out_n):
                        for j in range(d):
                            grown[a, j] = out[a, j]
                    out = grown
                sq = np.sqrt((n_steps - birth[i]) * dt)
                for j in range(d):
                    out[out_n, j] = pos[i, j] + sq * np.random.standard_normal()
                out_n += 1
                continue
            if event_step > last_event:
                last_event = event_step
            coin = np.random.random()
            if coin < 0.5:
                continue  # dies at the event; position never needed
            sq = np.sqrt(life * dt)
            for j in range(d):
                val = pos[i, j] + sq * np.random.standard_normal()
                nxt[nc, j] = val
                nxt[nc + 1, j] = val
            nxt_birth[nc] = event_step
            nxt_birth[nc + 1] = event_step
            nc += 2
        pos, nxt = nxt, pos
        birth, nxt_birth = nxt_birth, birth
        count = nc
    return out[:out_n], out_n, last_event
