from aircode.scatter.profiles import RadialProfile, SpectralSlab, radial_grid, frequency_grid
from aircode.scatter.hankel import hankel_transform, inverse_hankel, inverse_hankel_values, round_trip_error
from aircode.scatter.layers import air_layer, air_transmission_profile, compose_layers, stack
from aircode.scatter.kubelka_munk import (KmConstants, MaterialSample, slab_profiles, semi_infinite_reflectance,
                                          transmissive_albedo, thick_substrate_depth, solid_reflectance,
                                          three_layer_reflectance, estimate_km_constants, estimate_km_from_spectra,
                                          km_from_slab)
from aircode.scatter.design import (AirPocketParams, DesignTargets, ContrastResult, ContrastModel,
                                    finite_pocket_reflection, contrast_from_profiles, surface_contrast,
                                    max_depth_for_albedo, recommend_parameters, albedo_curve, contrast_curve,
                                    blend_radius)
from aircode.scatter.material import (km_model, calibrate_absorption, material_from_spec, load_fixture_material,
                                      load_material, synthesize_sample, read_sample_csv, write_sample_csv)
