"""Grant-free LDS-OFDM uplink: embedded preamble detection, message
passing decoding, and a reproducible Monte Carlo harness."""

from .signatures import (
    Constellation,
    FactorGraph,
    SignatureMatrix,
    build_constellation,
    build_signature_matrix,
    count_four_cycles,
    load_matrix,
    matrix_4x6,
    restrict_graph,
    save_matrix,
)
from .preambles import (
    CorrelationProfile,
    PreamblePool,
    build_preamble,
    build_preamble_pool,
    busy_test,
    correlate,
    estimate_loads,
    rice_scale,
    zc_sequence,
)
from .channel import (
    ReceivedFrame,
    Scenario,
    default_constellations,
    draw_activity,
    make_received_frame,
    make_scenario,
    snr_to_sigma,
    transmit_data,
    transmit_preamble,
)
from .aud import (
    DetectorConfig,
    SupersetEstimate,
    amp_detect,
    cover_decode,
    mpa_detect,
    omp_detect,
    predicted_search_space,
    rice_log_pdf,
    tl_mpa_detect,
)
from .decoder import (
    DecodedPacket,
    PipelineConfig,
    PipelineResult,
    brute_force_map,
    correct_false_alarms,
    detect_and_decode,
    mpa_decode,
    zero_symbol_threshold,
)
from .harness import (
    CSV_HEADER,
    DETECTORS,
    ConfigError,
    ExperimentConfig,
    SweepResults,
    SweepRow,
    TrialCounts,
    compute_metrics,
    config_from_file,
    inspect_trial,
    read_csv,
    run_sweep,
    run_trial,
    wilson_interval,
    write_csv,
)

__version__ = "0.1.0"
