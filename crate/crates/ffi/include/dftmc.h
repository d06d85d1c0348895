/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef DFTMC_H
#define DFTMC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
typedef enum DftmcStatus {
  DFTMC_STATUS_OK = 0,
  // A required pointer argument was null.
  DFTMC_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  DFTMC_STATUS_INVALID_UTF8 = 2,
  // Tree text or scenario document could not be parsed or synthesized.
  DFTMC_STATUS_PARSE = 3,
  // The tree violates a well-formedness rule.
  DFTMC_STATUS_INVALID_TREE = 4,
  // Unknown measure or parameter, or a parameter value out of range.
  DFTMC_STATUS_INVALID_ARGUMENT = 5,
  // The state space exceeds the configured limit.
  DFTMC_STATUS_STATE_LIMIT = 6,
  // The measure is undefined for this model (e.g. infinite MTTF).
  DFTMC_STATUS_UNDEFINED = 7,
  // A numerical method failed.
  DFTMC_STATUS_NUMERICAL = 8,
  // The approximation hit its state cap; the bounds are still sound.
  DFTMC_STATUS_IMPRECISE = 9,
  // Internal error; the library caught a panic.
  DFTMC_STATUS_INTERNAL = 10,
} DftmcStatus;

// The labelled CTMC of a tree.
typedef struct DftmcModel DftmcModel;

// A parsed fault tree.
typedef struct DftmcTree DftmcTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or null. Owned by
// the library; valid until the next call on this thread.
const char *dftmc_last_error(void);

// Library version, a static string.
const char *dftmc_version(void);

// Parses a tree in the Galileo text format.
enum DftmcStatus dftmc_tree_parse(const char *source, struct DftmcTree **out);

// Synthesizes the complete tree of a TOML scenario document.
enum DftmcStatus dftmc_scenario_synthesize(const char *document, struct DftmcTree **out);

// Writes a simplified, measure-preserving copy of `tree` to `out`.
enum DftmcStatus dftmc_tree_rewrite(const struct DftmcTree *tree, struct DftmcTree **out);

// Galileo text of `tree`; release with [`dftmc_string_free`].
enum DftmcStatus dftmc_tree_serialize(const struct DftmcTree *tree, char **out);

// Number of elements (basic events, gates, dependencies); 0 for null.
size_t dftmc_tree_element_count(const struct DftmcTree *tree);

void dftmc_tree_free(struct DftmcTree *tree);

void dftmc_string_free(char *s);

// Builds the CTMC of `tree` with `n_params` parameter overrides
// (`param_names[i] = param_values[i]`). `max_states` of 0 means the
// default limit.
enum DftmcStatus dftmc_model_build(const struct DftmcTree *tree,
                                   const char *const *param_names,
                                   const double *param_values,
                                   size_t n_params,
                                   size_t max_states,
                                   struct DftmcModel **out);

// Number of CTMC states; 0 for null.
size_t dftmc_model_state_count(const struct DftmcModel *model);

// Number of CTMC transitions; 0 for null.
size_t dftmc_model_transition_count(const struct DftmcModel *model);

// Evaluates a measure by name (`unreliability`, `mttf`, `ffa`, ...) from
// the initial state. `t` is the horizon of time-bounded measures,
// `lifetime` the AFH lifetime and `drivecycle` the FLOD/SILFO cycle.
enum DftmcStatus dftmc_model_measure(const struct DftmcModel *model,
                                     const char *measure,
                                     double t,
                                     double lifetime,
                                     double drivecycle,
                                     double *value);

void dftmc_model_free(struct DftmcModel *model);

// Bounds `unreliability` (at horizon `t`) or `mttf` by partial
// exploration until `upper - lower <= rel_err * lower`. `max_states` of 0
// means the default cap. On `DFTMC_STATUS_IMPRECISE` the bounds are written
// and still sound.
enum DftmcStatus dftmc_approximate(const struct DftmcTree *tree,
                                   const char *measure,
                                   double t,
                                   double rel_err,
                                   size_t max_states,
                                   double *lower,
                                   double *upper);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DFTMC_H */
