// Benchmarks the OpenMP kernels against their serial references and checks
// that both produce identical bits. Sizes roughly track the shapes the
// training loop and the attestation distance actually see.

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cfa/graph.hpp"
#include "cfa/hausdorff.hpp"
#include "cfa/linalg.hpp"
#include "cfa/rng.hpp"
#include "cfa/vgae.hpp"
#include "cfa/workload.hpp"

using namespace cfa;

namespace {

double now_seconds() {
#ifdef _OPENMP
    return omp_get_wtime();
#else
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
#endif
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (double& v : m.data) v = 2.0 * rng.uniform_real() - 1.0;
    return m;
}

template <typename F>
double time_best_of(const F& fn, int rounds) {
    double best = 1e30;
    for (int i = 0; i < rounds; ++i) {
        double t0 = now_seconds();
        fn();
        best = std::min(best, now_seconds() - t0);
    }
    return best;
}

void report(const std::string& name, double serial, double parallel,
            bool identical) {
    std::printf("%-24s serial %9.4f ms   parallel %9.4f ms   speedup %5.2fx   %s\n",
                name.c_str(), serial * 1e3, parallel * 1e3, serial / parallel,
                identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (compiled without OpenMP)\n");
#endif
    Rng rng(2024);
    const int rounds = 5;

    {
        Matrix a = random_matrix(2000, 64, rng);
        Matrix b = random_matrix(64, 48, rng);
        Matrix ref, par;
        double ts = time_best_of([&] { ref = matmul_serial(a, b); }, rounds);
        double tp = time_best_of([&] { par = matmul(a, b); }, rounds);
        report("matmul 2000x64x48", ts, tp, ref.data == par.data);
    }
    {
        Matrix a = random_matrix(2000, 64, rng);
        Matrix b = random_matrix(2000, 48, rng);
        Matrix ref, par;
        double ts = time_best_of([&] { ref = matmul_ta_serial(a, b); }, rounds);
        double tp = time_best_of([&] { par = matmul_ta(a, b); }, rounds);
        report("matmul_ta 64x2000x48", ts, tp, ref.data == par.data);
    }
    {
        WorkloadSpec spec;
        spec.n_blocks = 2000;
        spec.branching = 2.4;
        spec.trace_len = 200000;
        spec.seed = 1;
        Workload wl = gen_workload(spec);
        ExecutionGraph g = build_graph(wl.traces[0]);
        SparseMatrix a_hat =
            normalize_adjacency(g.edges_src, g.edges_dst, g.node_count());
        Matrix x = random_matrix(g.node_count(), 64, rng);
        Matrix ref, par;
        double ts = time_best_of([&] { ref = spmm_serial(a_hat, x); }, rounds);
        double tp = time_best_of([&] { par = spmm(a_hat, x); }, rounds);
        report("spmm trace graph", ts, tp, ref.data == par.data);

        GraphTopology topo = build_topology(wl.traces[0]);
        Matrix feats;
        double tf = time_best_of(
            [&] { feats = extract_features(topo, spec.trace_len); }, rounds);
        std::printf("%-24s one pass %8.4f ms (parallel per node)\n",
                    "extract_features", tf * 1e3);
    }
    {
        Matrix a = random_matrix(2000, kLatentDim, rng);
        Matrix b = random_matrix(2000, kLatentDim, rng);
        double ref = 0.0, par = 0.0;
        double ts = time_best_of([&] { ref = directed_hausdorff_serial(a, b); },
                                 rounds);
        double tp = time_best_of([&] { par = directed_hausdorff(a, b); },
                                 rounds);
        report("hausdorff 2000x2000", ts, tp, ref == par);
    }
    return 0;
}
