"""Hybrid face-video codec toolkit: lossless keypoint coding, a key-frame/keypoint
container, rate and delay accounting, and the mask blend at the generator boundary.
"""

from .arith import AdaptiveBinaryModel, arith_decode, arith_encode
from .bitio import (
    BitReader, BitWriter, exp_golomb_codeword, exp_golomb_decode, exp_golomb_encode, unzigzag,
    zigzag,
)
from .container import (
    FrameRole, KeyCodec, StreamHeader, classify_frame, demux, mux, rearrange, split_stream,
)
from .errors import (
    CorruptStreamError, DomainError, GeneratorError, HkpcError, KeyCodecError, ParseError,
    StructuralError, TruncatedStreamError, UnsupportedFormatError,
)
from .keypoints import (
    dequantize, quantize, read_sidecar, simulate_quantization_noise, write_sidecar,
)
from .kpcodec import (
    PredictionMode, ResidualFrame, decode_segment, encode_segment, predict_inter, predict_intra,
)
from .pipeline import ExternalKeyCodec, StoreKeyCodec, decode_stream, encode_stream
from .pixelops import (
    ExternalGenerator, ExternalMask, UniformMask, bi_blend, external_generator,
    identity_generator, psnr_y,
)
from .rate import (
    Mode, RateCurve, RatePoint, VideoParams, average_bitrate, bd_rate, convert_units,
    curve_from_rows, delay_frames, plan, read_rate_table, select_rows,
)
from .y4m import FramePlane, Y4MVideo, read_y4m, write_y4m

__version__ = "0.1.0"
