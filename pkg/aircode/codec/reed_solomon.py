"""
Systematic Reed-Solomon coding over GF(256).

The field uses the primitive polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11d) with generator 2; the code
generator polynomial has its first consecutive root at alpha^0. Decoding follows the classic chain of
syndromes, Berlekamp-Massey, Chien search and Forney.
"""
import logging
import math
from fractions import Fraction
from typing import List, Sequence

import numpy as np

from aircode.errors import InvalidInputError, UnrecoverableError

module_logger = logging.getLogger(__name__)

PRIMITIVE_POLY = 0x11d
GENERATOR = 2
BLOCK_LENGTH = 255

GF_EXP = [0] * 512
GF_LOG = [0] * 256


def _init_tables():
    x = 1
    for i in range(255):
        GF_EXP[i] = x
        GF_LOG[x] = i
        x <<= 1
        if x & 0x100:
            x ^= PRIMITIVE_POLY
    for i in range(255, 512):
        GF_EXP[i] = GF_EXP[i - 255]


_init_tables()


def gf_mul(x: int, y: int) -> int:
    if x == 0 or y == 0:
        return 0
    return GF_EXP[GF_LOG[x] + GF_LOG[y]]


def gf_div(x: int, y: int) -> int:
    if y == 0:
        raise ZeroDivisionError("Division by zero in GF(256)")
    if x == 0:
        return 0
    return GF_EXP[(GF_LOG[x] + 255 - GF_LOG[y]) % 255]


def gf_pow(x: int, power: int) -> int:
    return GF_EXP[(GF_LOG[x] * power) % 255]


def gf_inverse(x: int) -> int:
    return GF_EXP[255 - GF_LOG[x]]


def gf_poly_scale(p: List[int], x: int) -> List[int]:
    return [gf_mul(c, x) for c in p]


def gf_poly_add(p: List[int], q: List[int]) -> List[int]:
    r = [0] * max(len(p), len(q))
    for i, c in enumerate(p):
        r[i + len(r) - len(p)] = c
    for i, c in enumerate(q):
        r[i + len(r) - len(q)] ^= c
    return r


def gf_poly_mul(p: List[int], q: List[int]) -> List[int]:
    r = [0] * (len(p) + len(q) - 1)
    for j, qc in enumerate(q):
        if qc == 0:
            continue
        for i, pc in enumerate(p):
            if pc != 0:
                r[i + j] ^= gf_mul(pc, qc)
    return r


def gf_poly_eval(p: List[int], x: int) -> int:
    y = p[0]
    for c in p[1:]:
        y = gf_mul(y, x) ^ c
    return y


def gf_poly_div(dividend: List[int], divisor: List[int]):
    """Synthetic division by a monic divisor; returns (quotient, remainder)."""
    out = list(dividend)
    for i in range(len(dividend) - (len(divisor) - 1)):
        coef = out[i]
        if coef != 0:
            for j in range(1, len(divisor)):
                if divisor[j] != 0:
                    out[i + j] ^= gf_mul(divisor[j], coef)
    separator = -(len(divisor) - 1)
    return out[:separator], out[separator:]


def generator_poly(nsym: int) -> List[int]:
    g = [1]
    for i in range(nsym):
        g = gf_poly_mul(g, [1, gf_pow(GENERATOR, i)])
    return g


class ReedSolomonCodec:
    """Encoder and decoder for one block with a fixed number of parity symbols."""

    def __init__(self, nsym: int):
        if nsym < 0 or nsym >= BLOCK_LENGTH:
            raise InvalidInputError(f"Invalid number of parity symbols: {nsym}", key="nsym")
        self.nsym = nsym
        self.generator = generator_poly(nsym)

    def encode(self, data: Sequence[int]) -> List[int]:
        data = list(data)
        if not data:
            raise InvalidInputError("Cannot encode an empty block", key="payload")
        if len(data) + self.nsym > BLOCK_LENGTH:
            raise InvalidInputError(f"Block of {len(data)} symbols does not fit {BLOCK_LENGTH - self.nsym}",
                                    key="block")
        if self.nsym == 0:
            return data
        _, remainder = gf_poly_div(data + [0] * self.nsym, self.generator)
        return data + remainder

    def syndromes(self, codeword: Sequence[int]) -> List[int]:
        # leading zero keeps the indices of the locator search aligned
        return [0] + [gf_poly_eval(list(codeword), gf_pow(GENERATOR, i)) for i in range(self.nsym)]

    def _error_locator(self, synd: List[int]) -> List[int]:
        err_loc, old_loc = [1], [1]
        shift = len(synd) - self.nsym
        for i in range(self.nsym):
            k = i + shift
            delta = synd[k]
            for j in range(1, len(err_loc)):
                delta ^= gf_mul(err_loc[-(j + 1)], synd[k - j])
            old_loc = old_loc + [0]
            if delta != 0:
                if len(old_loc) > len(err_loc):
                    new_loc = gf_poly_scale(old_loc, delta)
                    old_loc = gf_poly_scale(err_loc, gf_inverse(delta))
                    err_loc = new_loc
                err_loc = gf_poly_add(err_loc, gf_poly_scale(old_loc, delta))
        while err_loc and err_loc[0] == 0:
            del err_loc[0]
        if 2 * (len(err_loc) - 1) > self.nsym:
            raise UnrecoverableError(f"More than {self.nsym // 2} symbol errors")
        return err_loc

    @staticmethod
    def _error_positions(err_loc_reversed: List[int], length: int) -> List[int]:
        errs = len(err_loc_reversed) - 1
        positions = [length - 1 - i for i in range(length)
                     if gf_poly_eval(err_loc_reversed, gf_pow(GENERATOR, i)) == 0]
        if len(positions) != errs:
            raise UnrecoverableError(f"Chien search found {len(positions)} of {errs} error locations")
        return positions

    def _correct(self, codeword: List[int], synd: List[int], positions: List[int]) -> List[int]:
        coef_pos = [len(codeword) - 1 - p for p in positions]
        locator = [1]
        for p in coef_pos:
            locator = gf_poly_mul(locator, gf_poly_add([1], [gf_pow(GENERATOR, p), 0]))
        _, evaluator = gf_poly_div(gf_poly_mul(synd[::-1], locator), [1] + [0] * len(locator))
        evaluator = evaluator[::-1]
        roots = [gf_pow(GENERATOR, -(BLOCK_LENGTH - p)) for p in coef_pos]
        magnitudes = [0] * len(codeword)
        for i, xi in enumerate(roots):
            xi_inv = gf_inverse(xi)
            derivative = 1
            for j, xj in enumerate(roots):
                if j != i:
                    derivative = gf_mul(derivative, 1 ^ gf_mul(xi_inv, xj))
            if derivative == 0:
                raise UnrecoverableError("Error magnitude is undefined")
            y = gf_mul(xi, gf_poly_eval(evaluator[::-1], xi_inv))
            magnitudes[positions[i]] = gf_div(y, derivative)
        return gf_poly_add(codeword, magnitudes)

    def decode(self, codeword: Sequence[int]) -> List[int]:
        """The data symbols of a received block; raises UnrecoverableError beyond the correction capacity."""
        codeword = list(codeword)
        if len(codeword) <= self.nsym:
            raise InvalidInputError(f"Block of {len(codeword)} symbols has no data", key="block")
        if self.nsym == 0:
            return codeword
        synd = self.syndromes(codeword)
        if max(synd) == 0:
            return codeword[:-self.nsym]
        err_loc = self._error_locator(synd)
        positions = self._error_positions(err_loc[::-1], len(codeword))
        corrected = self._correct(codeword, synd, positions)
        if max(self.syndromes(corrected)) != 0:
            raise UnrecoverableError("Residual syndromes after correction")
        module_logger.debug("Corrected %d symbol errors", len(positions))
        return corrected[:-self.nsym]


def parity_symbols(data_symbols: int, redundancy: float) -> int:
    """nsym = ceil(r * k / (1 - r)), evaluated exactly so that r = 0.4 and k = 12 give 8."""
    r = Fraction(str(redundancy))
    if not 0 <= r < 1:
        raise InvalidInputError(f"Redundancy must be in [0, 1), but is {redundancy}", key="redundancy")
    return math.ceil(r * data_symbols / (1 - r))


def block_sizes(data_symbols: int, redundancy: float) -> List[int]:
    """Split a payload into near-equal blocks that each fit one codeword of 255 symbols."""
    r = Fraction(str(redundancy))
    per_block = math.floor(BLOCK_LENGTH * (1 - r))
    while per_block > 0 and per_block + parity_symbols(per_block, redundancy) > BLOCK_LENGTH:
        per_block -= 1
    if per_block <= 0:
        raise InvalidInputError(f"Redundancy {redundancy} leaves no room for data", key="redundancy")
    blocks = math.ceil(data_symbols / per_block)
    base, extra = divmod(data_symbols, blocks)
    return [base + 1 if i < extra else base for i in range(blocks)]


def bits_to_bytes(bits: Sequence[int]) -> List[int]:
    """MSB-first packing; the last byte is padded with zeros."""
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tolist()


def bytes_to_bits(symbols: Sequence[int]) -> np.ndarray:
    return np.unpackbits(np.asarray(symbols, dtype=np.uint8))


def codeword_length(payload_bits: int, redundancy: float) -> int:
    """Codeword length in bits for a payload of the given length."""
    if payload_bits <= 0:
        raise InvalidInputError("Payload must not be empty", key="payload")
    k = math.ceil(payload_bits / 8)
    return 8 * sum(size + parity_symbols(size, redundancy) for size in block_sizes(k, redundancy))


def rs_encode(payload_bits: Sequence[int], redundancy: float = 0.40) -> np.ndarray:
    """Encode payload bits into codeword bits (blocks are concatenated)."""
    payload_bits = np.asarray(payload_bits, dtype=np.uint8)
    if payload_bits.size == 0:
        raise InvalidInputError("Payload must not be empty", key="payload")
    if np.any(payload_bits > 1):
        raise InvalidInputError("Payload must consist of bits", key="payload")
    data = bits_to_bytes(payload_bits)
    codeword: List[int] = []
    start = 0
    for size in block_sizes(len(data), redundancy):
        codec = ReedSolomonCodec(parity_symbols(size, redundancy))
        codeword.extend(codec.encode(data[start:start + size]))
        start += size
    return bytes_to_bits(codeword)


def rs_decode_symbols(codeword: Sequence[int], payload_bits: int, redundancy: float = 0.40) -> List[int]:
    """Decode the data bytes of a codeword given as symbols."""
    k = math.ceil(payload_bits / 8)
    sizes = block_sizes(k, redundancy)
    expected = sum(size + parity_symbols(size, redundancy) for size in sizes)
    codeword = list(codeword)
    if len(codeword) != expected:
        raise InvalidInputError(f"Codeword has {len(codeword)} symbols, expected {expected}", key="codeword")
    data: List[int] = []
    start = 0
    for index, size in enumerate(sizes):
        nsym = parity_symbols(size, redundancy)
        block = codeword[start:start + size + nsym]
        try:
            data.extend(ReedSolomonCodec(nsym).decode(block))
        except UnrecoverableError as e:
            raise UnrecoverableError(f"Block {index}: {e.reason}")
        start += size + nsym
    return data


def rs_decode(codeword_bits: Sequence[int], payload_bits: int, redundancy: float = 0.40) -> np.ndarray:
    """Recover payload bits from (possibly corrupted) codeword bits."""
    codeword_bits = np.asarray(codeword_bits, dtype=np.uint8)
    if codeword_bits.size % 8 != 0:
        raise InvalidInputError(f"Codeword of {codeword_bits.size} bits is not byte aligned", key="codeword")
    data = rs_decode_symbols(bits_to_bytes(codeword_bits), payload_bits, redundancy)
    return bytes_to_bits(data)[:payload_bits]
