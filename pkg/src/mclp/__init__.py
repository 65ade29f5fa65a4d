"""CELP speech codec: narrowband analysis-by-synthesis coding with an embedded
wideband layer, a bit-exact container format and packet-loss tooling."""

__version__ = "0.1.0"

from .bitstream import (ContainerHeader, pack_frame, read_container, unpack_frame,
                        write_container)
from .codebooks import MODES, NB_HIGH, NB_LOW, WB_HIGH, WB_LOW, ModeTable, mode_by_name
from .codec import decode_frames, encode_signal, make_decoder, make_encoder
from .nb import FrameParams, NarrowbandDecoder, NarrowbandEncoder, SubframeParams
from .wideband import WbFrameParams, WidebandDecoder, WidebandEncoder

__all__ = [
    "ContainerHeader", "FrameParams", "MODES", "ModeTable", "NB_HIGH", "NB_LOW",
    "NarrowbandDecoder", "NarrowbandEncoder", "SubframeParams", "WB_HIGH", "WB_LOW",
    "WbFrameParams", "WidebandDecoder", "WidebandEncoder", "decode_frames",
    "encode_signal", "make_decoder", "make_encoder", "mode_by_name", "pack_frame",
    "read_container", "unpack_frame", "write_container",
]
