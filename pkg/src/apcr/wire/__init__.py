from .ear import EAR_PROFILE, EarResult, EarStatus, decode_ear, encode_ear
from .framing import LETTERS, MAX_FRAME, Frame, MsgType, frame, unframe
from .messages import (
    CHALLENGE_LEN,
    DOOR_KEY_LEN,
    KDC_CHALLENGE_LEN,
    KEY_MATERIAL_LEN,
    KEY_REQUEST_LEN,
    EvidenceMsg,
    KdcVerdictMsg,
    Metrics,
    decode_challenge,
    decode_evidence,
    decode_kdc_challenge,
    decode_kdc_evidence,
    decode_kdc_result_attester,
    decode_kdc_result_rp,
    decode_key_material,
    decode_key_request,
    decode_result,
    encode_challenge,
    encode_evidence,
    encode_kdc_challenge,
    encode_kdc_evidence,
    encode_kdc_result_attester,
    encode_kdc_result_rp,
    encode_key_material,
    encode_key_request,
    encode_result,
    result_size,
)

__all__ = [name for name in dir() if not name.startswith("_")]
