"""RoPE as a biased mixed-radix system: scale plans and analytic diagnostics."""
from .rope_core import (
    FrequencySchedule,
    RopeParams,
    apply_rotation,
    build_frequencies,
    rotation_angles,
    rotation_progress,
    wavelength,
)
from .radix import (
    MixedRadixSpec,
    RadixDigits,
    digit_at,
    encode,
    from_digits,
    incomplete_digits,
    representable_range,
    rope_radix_of,
)
from .extensions import (
    DegeneratePartitionError,
    Method,
    ScalePlan,
    compile_plan,
    compute_boundaries,
    plan_mrrope_pro,
    plan_mrrope_uni,
    plan_ntk,
    plan_pi,
    plan_yarn,
    scaled_frequencies,
    temperature,
)
from .diagnostics import (
    BoundProfile,
    DiagnosticSeries,
    biased_estimate,
    bound_function,
    cumulative_scale_curve,
    find_bound_root,
    linearity_score,
    middle_attention_sim,
    middle_band_bound,
)
from .toy_attention import AttentionHead, attention_row, score
from .estimator import RotaryFeatures

__version__ = "0.1.0"
