"""Wavelet despeckling and SOM deblurring toolkit for SAR-style imagery."""

from .baselines import ClsConfig, cls_restore, rp_from_bsnr
from .degrade import (BlurKernel, NoiseSpec, apply_additive, apply_speckle,
                      convolve_periodic, convolve_valid, gaussian_kernel, sigma_for_bsnr)
from .errors import (DegenerateInputError, DomainError, ImageFormatError,
                     ParameterError, RestoreError, ShapeError)
from .imagecore import Patch, extract_patch, load_image, save_image
from .metrics import MetricsReport, bsnr, enl, isnr, mse, psnr
from .shrinkage import (DsConfig, ShrinkageRule, ds_filter, map_grid_oracle, shrink_linear,
                        shrink_mask, shrink_soft_laplacian, smooth_shrink, soft, wavelet_shrink)
from .somdeblur import (SomConfig, SomMap, alpha_schedule, calibrate, distance_graph,
                        kernel_weight, quant_error, sigma_schedule, som_reconstruct,
                        som_train, window_deblur, winner)
from .wavelet import DB4, HAAR, SubbandSet, WaveletFamily, dwt2, dwt2_multi, idwt2, idwt2_multi

__version__ = "0.1.0"
