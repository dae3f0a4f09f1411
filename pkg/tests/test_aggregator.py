"""Streaming EMA aggregation over per-sequence estimates."""

import io
import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from longmem.aggregator import (
    LearningRateSchedule,
    ema_init,
    ema_update,
    run_dataset,
)
from longmem.embeddings import OovPolicy, SymbolSequence
from longmem.errors import (
    DimensionMismatchError,
    DomainError,
    EmptyInputError,
)
from longmem.estimator import EstimatorConfig, LowFrequency
from longmem.synth import FgnSpec, generate_fgn, normal_bucket_table, quantize_to_symbols


def test_schedule_alpha_values():
    schedule = LearningRateSchedule()  # alpha0 = 1, tau = 10
    assert schedule.alpha(0) == 1.0
    assert np.isclose(schedule.alpha(10), 0.5)
    assert np.isclose(LearningRateSchedule(alpha0=0.5, tau=2.0).alpha(2), 0.25)


def test_schedule_rejects_bad_params():
    with pytest.raises(DomainError):
        LearningRateSchedule(alpha0=0.0)
    with pytest.raises(DomainError):
        LearningRateSchedule(tau=-1.0)


def test_ema_init_defaults_to_zero():
    state = ema_init(3)
    assert np.array_equal(state.d_hat, np.zeros(3))
    assert state.step == 0


def test_ema_init_rejects_bad_shape():
    with pytest.raises(DimensionMismatchError):
        ema_init(2, d0=np.zeros(3))


def test_first_update_with_unit_alpha_forgets_init():
    state = ema_init(2, d0=np.array([9.0, -9.0]))
    batch = np.array([[1.0, 2.0], [3.0, 4.0]])
    updated = ema_update(state, batch, LearningRateSchedule())
    assert np.array_equal(updated.d_hat, batch.mean(axis=0))
    assert updated.step == 1


def test_ema_update_validation():
    state = ema_init(2)
    schedule = LearningRateSchedule()
    with pytest.raises(EmptyInputError):
        ema_update(state, np.empty((0, 2)), schedule)
    with pytest.raises(DimensionMismatchError):
        ema_update(state, np.ones((1, 3)), schedule)
    with pytest.raises(DomainError):
        ema_update(state, np.array([[np.nan, 1.0]]), schedule)


@settings(max_examples=60)
@given(
    arrays(np.float64, (4, 2), elements=st.floats(-10, 10)),
    arrays(np.float64, (2,), elements=st.floats(-10, 10)),
    st.integers(0, 50),
    st.floats(0.01, 1.0),
    st.floats(0.1, 100.0),
)
def test_update_is_convex_combination(batch, d0, step, alpha0, tau):
    from longmem.aggregator import EmaState

    state = EmaState(d_hat=d0, step=step)
    schedule = LearningRateSchedule(alpha0=alpha0, tau=tau)
    updated = ema_update(state, batch, schedule)
    mean = batch.mean(axis=0)
    lo = np.minimum(d0, mean) - 1e-12
    hi = np.maximum(d0, mean) + 1e-12
    assert np.all(updated.d_hat >= lo) and np.all(updated.d_hat <= hi)


def _quantized_fgn_dataset(n, d=0.3, length=2048, vocab=64, seed0=82000):
    table = normal_bucket_table(vocab)
    seqs = []
    for s in range(n):
        x = generate_fgn(FgnSpec(hurst=d + 0.5, length=length, seed=seed0 + s))
        seqs.append(quantize_to_symbols(x, vocab, table=table))
    return seqs, table


def test_run_dataset_recovers_memory_coefficient():
    seqs, table = _quantized_fgn_dataset(512)
    config = EstimatorConfig(pad_length=2048, cutoff=LowFrequency(45))
    result = run_dataset(
        seqs, table, config, OovPolicy.ZERO, LearningRateSchedule(), batch_size=256
    )
    assert result.n_estimated == 512
    assert result.n_skipped == 0
    assert abs(float(result.state.d_hat.mean()) - 0.3) <= 0.05
    assert result.mean_periodogram is not None
    assert result.mean_periodogram.length == 2048


def test_run_dataset_skips_degenerate_sequences():
    seqs, table = _quantized_fgn_dataset(6, length=256)
    # an OOV-only sequence under the zero policy embeds to the all-zero
    # series, whose periodogram is degenerate and must be skipped
    broken = SymbolSequence(["missing"] * 256)
    stream = seqs[:3] + [broken] + seqs[3:]
    config = EstimatorConfig(pad_length=256, cutoff=LowFrequency(16))
    result = run_dataset(
        stream, table, config, OovPolicy.ZERO, LearningRateSchedule(), batch_size=4
    )
    assert result.n_estimated == 6
    assert result.n_skipped == 1


def test_run_dataset_empty_yield_raises():
    table = normal_bucket_table(8)
    broken = [SymbolSequence(["missing"] * 64)] * 3
    config = EstimatorConfig(pad_length=64)
    with pytest.raises(EmptyInputError):
        run_dataset(
            broken, table, config, OovPolicy.ZERO, LearningRateSchedule(), batch_size=2
        )


def test_run_dataset_progress_line_format():
    seqs, table = _quantized_fgn_dataset(8, length=256)
    config = EstimatorConfig(pad_length=256)
    sink = io.StringIO()
    run_dataset(
        seqs, table, config, OovPolicy.ZERO, LearningRateSchedule(),
        batch_size=3, progress=sink,
    )
    lines = sink.getvalue().strip().split("\n")
    assert len(lines) == 3  # 3 + 3 + 2
    pattern = re.compile(r"^batch=\d+ alpha=[0-9.eE+-]+ dbar_mean=-?[0-9.eE+-]+$")
    for line in lines:
        assert pattern.match(line), line
    assert lines[0].startswith("batch=0 alpha=1 ")


def test_run_dataset_worker_count_does_not_change_result():
    seqs, table = _quantized_fgn_dataset(16, length=256)
    config = EstimatorConfig(pad_length=256)
    kwargs = dict(
        table=table, config=config, policy=OovPolicy.ZERO,
        schedule=LearningRateSchedule(), batch_size=5,
    )
    serial = run_dataset(seqs, **kwargs)
    threaded = run_dataset(seqs, workers=4, **kwargs)
    assert np.array_equal(serial.state.d_hat, threaded.state.d_hat)
    assert np.array_equal(
        serial.mean_periodogram.power, threaded.mean_periodogram.power
    )


def test_run_dataset_matches_manual_ema_composition():
    seqs, table = _quantized_fgn_dataset(6, length=256)
    config = EstimatorConfig(pad_length=256)
    schedule = LearningRateSchedule()
    result = run_dataset(
        seqs, table, config, OovPolicy.ZERO, schedule, batch_size=3
    )
    from longmem.estimator import estimate_sequence

    state = ema_init(table.dim)
    for batch in (seqs[:3], seqs[3:]):
        ests = np.stack([estimate_sequence(s, table, config).d for s in batch])
        state = ema_update(state, ests, schedule)
    assert np.array_equal(result.state.d_hat, state.d_hat)


def test_run_dataset_validates_sizes():
    seqs, table = _quantized_fgn_dataset(2, length=256)
    config = EstimatorConfig(pad_length=256)
    with pytest.raises(DomainError):
        run_dataset(seqs, table, config, OovPolicy.ZERO, LearningRateSchedule(), batch_size=0)
    with pytest.raises(DomainError):
        run_dataset(
            seqs, table, config, OovPolicy.ZERO, LearningRateSchedule(),
            batch_size=1, workers=0,
        )
