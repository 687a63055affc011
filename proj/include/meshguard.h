/* meshguard C API
 *
 * Shared-library interface for the meshguard toolkit: loading and saving
 * simplicial meshes (Gmsh MSH 2.2 ASCII), checking mesh quality against an
 * angle threshold policy, projecting nodal deformation fields onto the
 * tangent space of the active quality constraints, and running quality-
 * constrained shape optimization.
 *
 * All objects are opaque handles created and destroyed through this API.
 * Functions return MG_OK on success; on failure a status code is returned
 * and a human-readable message is available via mg_last_error_message()
 * (thread local, valid until the next API call on the same thread).
 *
 * Angles are radians (2D triangle angles) or steradians (3D solid angles).
 */

#ifndef MESHGUARD_H
#define MESHGUARD_H

#include <stdint.h>

#if defined(_WIN32)
#define MG_API __declspec(dllexport)
#else
#define MG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mg_status {
    MG_OK = 0,
    MG_ERROR_IO = 1,         /* file missing or unreadable/unwritable */
    MG_ERROR_PARSE = 2,      /* malformed mesh/config/field file */
    MG_ERROR_ARGUMENT = 3,   /* invalid argument or configuration value */
    MG_ERROR_DEGENERATE = 4, /* degenerate mesh cell */
    MG_ERROR_INFEASIBLE = 5, /* mesh violates the threshold policy */
    MG_ERROR_NUMERIC = 6,    /* linear solver or line search breakdown */
    MG_ERROR_UNSUPPORTED = 7 /* unsupported element type / format version */
} mg_status;

typedef struct mg_mesh mg_mesh;
typedef struct mg_projection mg_projection;
typedef struct mg_run mg_run;

MG_API const char* mg_status_string(mg_status status);

/* Message describing the most recent failure on the calling thread. */
MG_API const char* mg_last_error_message(void);

/* ---- meshes ------------------------------------------------------------ */

/* Load a Gmsh MSH 2.2 ASCII mesh. Nodes are renumbered consecutively in
 * file order; inverted cells are repaired by a node swap (see
 * mg_mesh_orientation_repairs). */
MG_API mg_status mg_mesh_load(const char* path, mg_mesh** out);

/* Write the mesh as MSH 2.2 ASCII with 17 significant digit coordinates.
 * The file is written atomically (temp file + rename). */
MG_API mg_status mg_mesh_save(const mg_mesh* mesh, const char* path);

MG_API void mg_mesh_free(mg_mesh* mesh);

MG_API int32_t mg_mesh_dim(const mg_mesh* mesh);
MG_API int64_t mg_mesh_node_count(const mg_mesh* mesh);
MG_API int64_t mg_mesh_cell_count(const mg_mesh* mesh);
MG_API int64_t mg_mesh_orientation_repairs(const mg_mesh* mesh);

/* Copy the flat coordinate vector [x1,y1,(z1),x2,...]; len must equal
 * dim * node_count. */
MG_API mg_status mg_mesh_coords(const mg_mesh* mesh, double* buffer, int64_t len);
MG_API mg_status mg_mesh_set_coords(mg_mesh* mesh, const double* buffer, int64_t len);

/* Signed cell measure (area in 2D, volume in 3D); negative indicates an
 * inverted cell. */
MG_API mg_status mg_mesh_cell_measure(const mg_mesh* mesh, int64_t cell, double* out);

/* ---- quality check ----------------------------------------------------- */

/* policy_json, e.g.
 *   {"threshold_policy":{"kind":"global","alpha_thr":0.436},
 *    "epsilon":1e-2,"fixed_boundary_groups":["wall"]}
 * kind is "global", "relative" (needs "nu") or "combined" (needs both).
 *
 * Writes a per-cell CSV report (columns cell_id,min_angle,max_angle,
 * aspect_ratio) to report_csv_path and a JSON summary {"min_angle":...,
 * "max_angle":...,"max_aspect_ratio":...,"feasible_under_policy":...}
 * to summary_json_path. Either path may be NULL to skip that artifact.
 * feasible_out (may be NULL) receives 1 if the mesh satisfies the policy.
 * Returns MG_OK whether or not the mesh is feasible. */
MG_API mg_status mg_quality_check(const mg_mesh* mesh, const char* policy_json,
                                  const char* report_csv_path,
                                  const char* summary_json_path,
                                  int32_t* feasible_out);

/* ---- deformation field files ------------------------------------------ */

/* Plain text field file: one line per node, dim whitespace-separated
 * decimals, node order matching the mesh. buffer length dim*node_count. */
MG_API mg_status mg_field_read(const char* path, const mg_mesh* mesh,
                               double* buffer, int64_t len);
MG_API mg_status mg_field_write(const char* path, const mg_mesh* mesh,
                                const double* buffer, int64_t len);

/* ---- tangent-space projection ------------------------------------------ */

/* Project a nodal field onto the tangent space of the constraints active
 * on `mesh` under the given policy. Fails with MG_ERROR_INFEASIBLE if the
 * mesh violates the policy. */
MG_API mg_status mg_project_field(const mg_mesh* mesh, const char* policy_json,
                                  const double* field, int64_t len,
                                  mg_projection** out);

MG_API int64_t mg_projection_active_count(const mg_projection* proj);
MG_API mg_status mg_projection_direction(const mg_projection* proj,
                                         double* buffer, int64_t len);
MG_API mg_status mg_projection_multipliers(const mg_projection* proj,
                                           double* buffer, int64_t len);
/* One multiplier per line, preceded by a header line "# q <count>". */
MG_API mg_status mg_projection_write_multipliers(const mg_projection* proj,
                                                 const char* path);
MG_API void mg_projection_free(mg_projection* proj);

/* ---- optimization ------------------------------------------------------ */

/* Run shape optimization from a JSON run configuration (see README for the
 * schema). Artifacts are written to output_dir: final.msh, run_log.jsonl
 * and, when write_every > 0, iter_NNNN.msh snapshots. output_dir overrides
 * the config's "output_dir" when non-NULL. threads <= 0 means the config
 * value (default 1). disable_constraints != 0 forces the classical
 * unconstrained method. */
MG_API mg_status mg_optimize(const char* config_json_path,
                             const char* output_dir, int32_t threads,
                             int32_t write_every, int32_t disable_constraints,
                             mg_run** out);

MG_API int64_t mg_run_iterations(const mg_run* run);
MG_API double mg_run_final_functional(const mg_run* run);
/* "gradient_tolerance", "kkt", "max_iterations", "step_underflow",
 * "no_descent" or "numeric_failure". */
MG_API const char* mg_run_termination_reason(const mg_run* run);
/* Borrowed reference; freed together with the run handle. */
MG_API const mg_mesh* mg_run_final_mesh(const mg_run* run);
MG_API void mg_run_free(mg_run* run);

#ifdef __cplusplus
}
#endif

#endif /* MESHGUARD_H */
