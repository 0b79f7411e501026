from aircode.codec.reed_solomon import (ReedSolomonCodec, rs_encode, rs_decode, rs_decode_symbols, parity_symbols,
                                        block_sizes, codeword_length, bits_to_bytes, bytes_to_bits)
from aircode.codec.layout import (CellKind, TagConfig, TagLayout, CORNERS, capacity, generate_layout, marker_centers,
                                  corner_adjacency, orientation_signature, canonical_rotation)
from aircode.codec.geometry import (AirPocketGeometry, layout_to_geometry, lateral_air_mask, expected_air_volume_mm3,
                                    write_geometry, read_geometry)
