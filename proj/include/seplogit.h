/*
 * seplogit C API: stratified binary graphical model estimation.
 *
 * All functions return seplogit_status; on failure the thread-local message
 * from seplogit_last_error() describes what went wrong. Objects returned
 * through out-parameters are owned by the caller and released with the
 * matching _free function. Passing NULL where an object is required yields
 * SEPLOGIT_ERR_USAGE.
 */
#ifndef SEPLOGIT_H
#define SEPLOGIT_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  SEPLOGIT_OK = 0,
  SEPLOGIT_ERR_USAGE = 1,   /* invalid arguments or options */
  SEPLOGIT_ERR_DATA = 2,    /* unreadable, unparsable or inconsistent data */
  SEPLOGIT_ERR_NUMERIC = 3  /* numerical failure */
} seplogit_status;

typedef struct seplogit_dataset seplogit_dataset;
typedef struct seplogit_truth seplogit_truth;
typedef struct seplogit_estimate seplogit_estimate;

const char* seplogit_version(void);

/* Message for the most recent failure on this thread; empty on success. */
const char* seplogit_last_error(void);

/* ---- datasets ------------------------------------------------------- */

/* Delimiter-separated text: header row, first column `stratum`, remaining
 * columns binary 0/1. */
seplogit_status seplogit_dataset_read(const char* path, seplogit_dataset** out);
seplogit_status seplogit_dataset_write(const seplogit_dataset* data, const char* path);
void seplogit_dataset_free(seplogit_dataset* data);

int seplogit_dataset_num_strata(const seplogit_dataset* data);
int seplogit_dataset_num_variables(const seplogit_dataset* data);
long seplogit_dataset_num_rows(const seplogit_dataset* data, int stratum);
const char* seplogit_dataset_stratum_name(const seplogit_dataset* data, int stratum);

/* ---- simulation ------------------------------------------------------ */

typedef struct {
  const char* structure; /* chain | 3nn | scale-free */
  int p;
  int k;
  long n;    /* observations per stratum */
  double rho;
  unsigned long long seed;
} seplogit_sim_design;

seplogit_status seplogit_simulate(const seplogit_sim_design* design,
                                  seplogit_dataset** data_out, seplogit_truth** truth_out);
seplogit_status seplogit_truth_write(const seplogit_truth* truth, const char* path);
void seplogit_truth_free(seplogit_truth* truth);

/* ---- estimation ------------------------------------------------------ */

typedef struct {
  const char* estimator; /* indep | fused | datashared | datashared-adaptive | reflasso */
  const char* rule;      /* and | or | min | max */
  const char* reference; /* stratum label, reflasso only; NULL otherwise */
  int grid_lambda1;      /* grid sizes; <= 0 means the default of 10 */
  int grid_lambda2;
  const char* lambda2_scale; /* common (default) | sqrt-n */
  double min_odds_ratio;     /* pair filter on exp(|coefficient|); 1 keeps all */
  unsigned long long seed;   /* recorded in the estimate file */
  int jobs;                  /* worker threads; <= 1 means serial */
} seplogit_fit_options;

seplogit_status seplogit_fit(const seplogit_dataset* data, const seplogit_fit_options* options,
                             seplogit_estimate** out);
seplogit_status seplogit_estimate_write(const seplogit_estimate* estimate, const char* path);
seplogit_status seplogit_estimate_read(const char* path, seplogit_estimate** out);
void seplogit_estimate_free(seplogit_estimate* estimate);

double seplogit_estimate_lambda1(const seplogit_estimate* estimate);
double seplogit_estimate_lambda2(const seplogit_estimate* estimate);
double seplogit_estimate_bic(const seplogit_estimate* estimate);
double seplogit_estimate_df(const seplogit_estimate* estimate);
long seplogit_estimate_num_edges(const seplogit_estimate* estimate);
long seplogit_estimate_num_heterogeneous(const seplogit_estimate* estimate);

/* ---- graph export ---------------------------------------------------- */

/* Writes one file per stratum (<prefix>_<stratum>.json or .dot), keeping
 * edges with exp(|coefficient|) >= min_odds_ratio. */
seplogit_status seplogit_export(const seplogit_estimate* estimate, const char* format,
                                double min_odds_ratio, const char* prefix);

/* ---- benchmark ------------------------------------------------------- */

typedef struct {
  const char* const* structures;
  int n_structures;
  int p;
  int k;
  long n;
  const double* rhos;
  int n_rhos;
  int replicates;
  unsigned long long seed;
  const char* const* estimators;
  int n_estimators;
  const char* rule;      /* symmetrization, default min */
  int grid_lambda1;
  int grid_lambda2;
  int jobs;
  int wall_timing;       /* 0: write 0 in the seconds column (reproducible files) */
} seplogit_bench_options;

/* Runs the full factorial of structures x rhos and writes one record per
 * (design, replicate, estimator) to records_path. */
seplogit_status seplogit_bench(const seplogit_bench_options* options, const char* records_path);

/* Per-(design, estimator) means over the records file; caller frees the
 * returned string with seplogit_string_free. */
seplogit_status seplogit_bench_summary(const char* records_path, char** out_text);
void seplogit_string_free(char* text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SEPLOGIT_H */
