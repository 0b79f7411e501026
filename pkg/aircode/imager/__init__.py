from aircode.imager.images import (GrayImage, encode_pgm, decode_pgm, write_pgm, read_pgm, write_capture_stack,
                                   read_capture_stack)
from aircode.imager.render import RadiosityKernels, profile_kernel, render_mask, scene_mask, render_radiosity
from aircode.imager.camera import (CameraModel, axis_rotation, apply_camera, warp_to_plane, pixel_to_plane,
                                   plane_to_pixel, marker_plane_mm)
from aircode.imager.degrade import (DegradationSpec, degrade, shade, add_noise, add_specular, quadratic_surface,
                                    normalized_coordinates)
from aircode.imager.separation import (SeparationResult, checkerboard_patterns, gaussian_kernel, profile_blur_kernel,
                                       scattering_kernel, simulate_capture, simulate_captures, separate)
