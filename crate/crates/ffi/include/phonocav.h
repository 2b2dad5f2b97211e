#ifndef PHONOCAV_H
#define PHONOCAV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum PcStatus {
  PC_STATUS_OK = 0,
  PC_STATUS_NULL_POINTER = 1,
  PC_STATUS_INVALID_ARGUMENT = 2,
  PC_STATUS_GEOMETRY = 3,
  PC_STATUS_SOLVER = 4,
  PC_STATUS_OUTSIDE_MESH = 5,
  PC_STATUS_IO = 6,
  PC_STATUS_BUFFER_TOO_SMALL = 7,
  PC_STATUS_PANIC = 8,
} PcStatus;

typedef enum PcModel {
  PC_MODEL_IN_PLANE = 0,
  PC_MODEL_OUT_OF_PLANE = 1,
} PcModel;

typedef enum PcGammaConvention {
  PC_GAMMA_CONVENTION_HALF = 0,
  PC_GAMMA_CONVENTION_FULL = 1,
} PcGammaConvention;

// Opaque triangle mesh.
typedef struct PcMesh PcMesh;

// Opaque set of eigenmodes sharing one mesh and material.
typedef struct PcModeSet PcModeSet;

typedef struct PcMaterial {
  double youngs_modulus;
  double poisson_ratio;
  double density;
} PcMaterial;

typedef struct PcUnitCell {
  double a;
  double b;
  double r;
  double gap;
  double height;
} PcUnitCell;

typedef struct PcCavity {
  double d;
  double c;
  double e;
  double r_prime;
  double theta;
  struct PcUnitCell mirror;
  size_t mirror_cells;
  // Clamps the outer faces of the mirror when set.
  bool clamped;
} PcCavity;

typedef struct PcGap {
  double lo_hz;
  double hi_hz;
} PcGap;

// Volumes over λ³ are NaN when the frequency is zero.
typedef struct PcModeReport {
  double frequency_hz;
  double veff_m3;
  double veff_over_lambda_p3;
  double veff_over_lambda_s3;
  double equipartition_ratio;
  double max_h_j_per_m3;
  bool degenerate;
} PcModeReport;

// Miller indices of the NV axis and of its x axis.
typedef struct PcOrientation {
  int32_t z[3];
  int32_t x[3];
} PcOrientation;

// Susceptibilities [Hz]; the A₁ pair is used only when `has_a` is set.
typedef struct PcSusceptibilities {
  double lambda_e;
  double lambda_e_prime;
  double lambda_a;
  double lambda_a_prime;
  bool has_a;
} PcSusceptibilities;

// Coupling rates g/2π [Hz]; `g_a` is NaN without A₁ susceptibilities.
typedef struct PcCouplings {
  double g_a;
  double g_e1;
  double g_e2;
} PcCouplings;

// `omega_r_hz <= 0` selects Ω_R = Γ_x/y.
typedef struct PcCoolingInputs {
  double omega_hz;
  double q;
  double temp_k;
  double gamma_xy_hz;
  double omega_r_hz;
  enum PcGammaConvention convention;
} PcCoolingInputs;

typedef struct PcCoolingReport {
  double n_th;
  double gamma_th_hz;
  double c;
  double gamma_e1_hz;
  double gamma_e2_hz;
  double n_fin;
} PcCoolingReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *pc_version(void);

// Copies the last error of this thread into `buf` (truncated, always
// NUL-terminated when `len > 0`) and returns the full length plus one.
// Returns 0 when the last call succeeded.
size_t pc_last_error_message(char *buf, size_t len);

// E = 1050 GPa, ν = 0.2, ρ = 3500 kg/m³.
struct PcMaterial pc_material_diamond(void);

struct PcUnitCell pc_unit_cell_reference(void);

struct PcCavity pc_cavity_reference(void);

// Meshes one periodic phononic-crystal cell with target edge length `h` [m].
enum PcStatus pc_mesh_unit_cell(const struct PcUnitCell *params, double h, struct PcMesh **out);

// Meshes the defect cavity with its finite mirrors.
enum PcStatus pc_mesh_cavity(const struct PcCavity *params, double h, struct PcMesh **out);

enum PcStatus pc_mesh_load(const char *file, struct PcMesh **out);

enum PcStatus pc_mesh_save(const struct PcMesh *handle, const char *file);

// Vertex count; 0 for a null handle.
size_t pc_mesh_node_count(const struct PcMesh *handle);

// Triangle count; 0 for a null handle.
size_t pc_mesh_element_count(const struct PcMesh *handle);

void pc_mesh_free(struct PcMesh *handle);

// Complete gaps of a periodic cell over both polarization families. Writes
// at most `capacity` gaps and the total count to `len`; returns
// `BufferTooSmall` when `capacity` is insufficient.
enum PcStatus pc_band_gaps(const struct PcMesh *handle,
                           const struct PcMaterial *mat,
                           size_t n_k,
                           size_t n_bands,
                           struct PcGap *out,
                           size_t capacity,
                           size_t *len);

// The `count` eigenmodes nearest `shift_hz`, sorted by frequency.
enum PcStatus pc_modes_solve(const struct PcMesh *handle,
                             const struct PcMaterial *mat,
                             enum PcModel kind,
                             double thickness,
                             double shift_hz,
                             size_t count,
                             struct PcModeSet **out);

// Number of modes; 0 for a null handle.
size_t pc_modes_len(const struct PcModeSet *handle);

enum PcStatus pc_mode_report(const struct PcModeSet *handle,
                             size_t index,
                             struct PcModeReport *out);

// Single-phonon strain tensor at (x, y), row-major into `out[9]`.
enum PcStatus pc_mode_zero_point_strain(const struct PcModeSet *handle,
                                        size_t index,
                                        double x,
                                        double y,
                                        double *out);

// Strain couplings of an NV at (x, y); a null `sus` selects the default
// E-doublet susceptibilities.
enum PcStatus pc_mode_couplings(const struct PcModeSet *handle,
                                size_t index,
                                double x,
                                double y,
                                const struct PcOrientation *orientation,
                                const struct PcSusceptibilities *sus,
                                struct PcCouplings *out);

void pc_modes_free(struct PcModeSet *handle);

// Bose–Einstein occupation of a mode at `omega_hz` and `temp_k`.
enum PcStatus pc_thermal_occupation(double omega_hz, double temp_k, double *out);

// Cooperativity and cooling figures for a coupling rate `g_hz` = g/2π.
enum PcStatus pc_cooling_report(double g_hz,
                                const struct PcCoolingInputs *inputs,
                                struct PcCoolingReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHONOCAV_H */
