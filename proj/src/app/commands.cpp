#include "cdskit/app/commands.hpp"
#include "cdskit/app/io_formats.hpp"
#include "cdskit/diffusion.hpp"
#include "cdskit/fixtures.hpp"
#include "cdskit/fusion.hpp"
#include "cdskit/kernels.hpp"
#include "cdskit/parallel.hpp"
#include "cdskit/matrix_io.hpp"

#include <chrono>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"

namespace cdskit::app {

namespace fs = std::filesystem;

namespace {

enum class LogLevel { Quiet, Info, Debug };

struct Context {
    Index base = 0;
    bool timings = false;
    LogLevel level = LogLevel::Info;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
    Json timing = Json::object();
    bool not_converged = false;

    void log(LogLevel at, const std::string& msg) const
    {
        if (at <= level)
            *err << "cdskit: " << msg << '\n';
    }

    template <class F>
    auto timed(const std::string& stage, F&& f)
    {
        const auto t0 = std::chrono::steady_clock::now();
        auto finish = [&] {
            const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
            timing[stage] = dt.count();
            log(LogLevel::Debug, stage + ": " + std::to_string(dt.count()) + " ms");
        };
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            finish();
        } else {
            auto r = f();
            finish();
            return r;
        }
    }

    void emit(Json report, const std::string& path)
    {
        if (timings)
            report["timings_ms"] = timing;
        if (path.empty())
            *out << report.dump(2) << '\n';
        else
            write_json(path, report);
    }
};

struct SolverOptions {
    std::size_t max_iters = 10000;
    double tol = 1e-10;
    double margin = 1e-4;

    void add(CLI::App* sub)
    {
        sub->add_option("--max-iters", max_iters, "Replicator iteration cap")->capture_default_str();
        sub->add_option("--tol", tol, "Stop when the largest coordinate change falls below this")
            ->capture_default_str();
        sub->add_option("--margin", margin, "alpha = (1 + margin) * lambda_max in auto mode")->capture_default_str();
    }

    SolverParams params() const
    {
        SolverParams p;
        p.max_iters = max_iters;
        p.tol = tol;
        p.margin = margin;
        p.validate();
        return p;
    }
};

AffinityMatrix load_affinity(const std::string& path)
{
    Matrix m = io::read_matrix(path);
    try {
        return AffinityMatrix(std::move(m));
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

std::vector<std::string> split_names(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

Json cluster_json(const ClusterResult& r, Index base)
{
    Json scores = Json::array();
    for (Index i : r.support)
        scores.push_back(r.x[Eigen::Index(i)]);
    Json j;
    j["support"] = ids_to_json(r.support, base);
    j["scores"] = std::move(scores);
    j["payoff"] = r.payoff;
    j["kkt_residual"] = r.kkt_residual;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["alpha"] = r.alpha;
    return j;
}

Json segmentation_json(const SegmentationScores& s)
{
    Json j;
    j["error_rate"] = s.error_rate;
    j["jaccard"] = s.jaccard;
    j["dsc"] = s.dsc;
    j["precision"] = s.precision;
    j["recall"] = s.recall;
    j["f_measure"] = s.f_measure;
    j["weighting"] = s.pixel_weighted ? "pixels" : "superpixels";
    return j;
}

std::vector<double> read_weights(const std::string& path)
{
    std::vector<double> out;
    for (long v : io::read_integer_list(path))
        out.push_back(static_cast<double>(v));
    return out;
}

// --- cluster -----------------------------------------------------------------

struct ClusterCommand {
    std::string affinity, constraints, alpha = "auto", out;
    std::size_t multi_start = 16;
    std::uint64_t seed = 0;
    bool single = false;
    SolverOptions solver;

    void add(CLI::App* sub)
    {
        sub->add_option("--affinity", affinity, "Affinity matrix file")->required();
        sub->add_option("--constraints", constraints, "Comma-separated seed ids; empty for plain dominant sets");
        sub->add_option("--alpha", alpha, "auto or a fixed regularisation value")->capture_default_str();
        sub->add_option("--multi-start", multi_start, "Starting points for the unconstrained search")
            ->capture_default_str();
        sub->add_option("--seed", seed, "Seed for the starting points")->capture_default_str();
        sub->add_flag("--single", single, "One constrained extraction instead of peel-off");
        sub->add_option("--out", out, "Report file (stdout when omitted)");
        solver.add(sub);
    }

    int run(Context& ctx)
    {
        const AffinityMatrix a = load_affinity(affinity);
        const VertexSet s = make_vertex_set(parse_id_list(constraints, ctx.base, "--constraints"));
        for (Index v : s)
            if (v >= a.size())
                throw InputError("--constraints: id " + std::to_string(v + ctx.base) + " is outside the graph");
        SolverParams params = solver.params();
        if (alpha != "auto") {
            try {
                params.alpha = std::stod(alpha);
            } catch (const std::exception&) {
                throw InputError("--alpha: expected auto or a number, got \"" + alpha + "\"");
            }
        }

        std::vector<ClusterResult> clusters;
        std::string mode;
        if (s.empty()) {
            mode = "dominant_sets";
            params.start = MultiStart{multi_start, seed};
            clusters = ctx.timed("solve", [&] { return extract_dominant_sets(a, params); });
        } else if (single) {
            mode = "single";
            clusters.push_back(ctx.timed("solve", [&] { return extract_cds(a, s, params); }));
        } else {
            mode = "peel_off";
            clusters = ctx.timed("solve", [&] { return peel_off_extract(a, s, params).clusters; });
        }

        Json report;
        report["command"] = "cluster";
        report["n"] = a.size();
        report["constraints"] = ids_to_json(s, ctx.base);
        report["mode"] = mode;
        Json list = Json::array();
        VertexSet all;
        for (const auto& c : clusters) {
            list.push_back(cluster_json(c, ctx.base));
            all = set_union(all, c.support);
            ctx.not_converged |= !c.converged;
        }
        report["clusters"] = std::move(list);
        report["union_support"] = ids_to_json(all, ctx.base);
        ctx.emit(std::move(report), out);
        return kExitOk;
    }
};

// --- segment -----------------------------------------------------------------

struct SegmentCommand {
    std::string features, adjacency, annotation, pixel_counts, gt, out;
    std::string kernel = "gaussian";
    double sigma = 1.0;
    std::size_t k = 7;
    SolverOptions solver;

    void add(CLI::App* sub)
    {
        sub->add_option("--features", features, "Superpixel feature matrix")->required();
        sub->add_option("--adjacency", adjacency, "0/1 superpixel adjacency (needed by the geodesic kernel)");
        sub->add_option("--annotation", annotation, "Annotation JSON")->required();
        sub->add_option("--pixel-counts", pixel_counts, "Pixels per superpixel, for pixel-weighted scores");
        sub->add_option("--gt", gt, "Ground-truth foreground ids");
        sub->add_option("--kernel", kernel, "gaussian, self-tuning or geodesic")
            ->check(CLI::IsMember({"gaussian", "self-tuning", "geodesic"}))
            ->capture_default_str();
        sub->add_option("--sigma", sigma, "Gaussian kernel width")->capture_default_str();
        sub->add_option("--k", k, "Neighbours for the self-tuning kernel")->capture_default_str();
        sub->add_option("--out", out, "Report file (stdout when omitted)");
        solver.add(sub);
    }

    int run(Context& ctx)
    {
        FeatureTable table(io::read_matrix(features));
        const Index n = static_cast<Index>(table.values().rows());
        std::optional<Matrix> adj;
        if (!adjacency.empty())
            adj = io::read_matrix(adjacency);
        if (kernel == "geodesic" && !adj)
            throw InputError("--kernel geodesic needs --adjacency");
        const Annotation ann = read_annotation(annotation, ctx.base);
        std::vector<double> counts;
        if (!pixel_counts.empty())
            counts = read_weights(pixel_counts);
        std::optional<VertexSet> truth;
        if (!gt.empty())
            truth = make_vertex_set(read_id_file(gt, ctx.base));
        const SolverParams params = solver.params();

        const AffinityMatrix a = ctx.timed("affinity", [&] {
            if (kernel == "geodesic")
                return AffinityMatrix(geodesic_adjacency_similarity(table.values(), *adj));
            if (kernel == "self-tuning")
                return build_affinity(table, SelfTuningKernel{k});
            return build_affinity(table, GaussianKernel{sigma});
        });
        const SegmentationResult r = ctx.timed("segment", [&] { return segment(a, ann, params); });
        for (const auto& w : r.warnings)
            ctx.log(LogLevel::Info, "warning: " + w);

        Json report;
        report["command"] = "segment";
        report["n"] = n;
        report["mask"] = ids_to_json(r.mask, ctx.base);
        report["uds"] = ids_to_json(r.uds, ctx.base);
        Json clusters = Json::array();
        for (const auto& c : r.clusters)
            clusters.push_back(ids_to_json(c, ctx.base));
        report["clusters"] = std::move(clusters);
        report["warnings"] = r.warnings;
        if (truth)
            report["metrics"] = segmentation_json(segmentation_metrics(r.mask, *truth, n, counts));
        ctx.emit(std::move(report), out);
        return kExitOk;
    }
};

// --- coseg ---------------------------------------------------------------------

struct CosegCommand {
    std::vector<std::string> instances, objectness, gts;
    std::string scribbles, out;
    SolverOptions solver;

    void add(CLI::App* sub)
    {
        sub->add_option("--instance", instances, "Instance manifest JSON, one per image")->required();
        sub->add_option("--objectness", objectness, "Objectness column per image, in instance order");
        sub->add_option("--scribbles", scribbles, "Scribble JSON; unsupervised when omitted");
        sub->add_option("--gt", gts, "Ground-truth foreground ids per image, in instance order");
        sub->add_option("--out", out, "Output directory for report.json and mask_<k>.txt");
        solver.add(sub);
    }

    int run(Context& ctx)
    {
        std::vector<CosegImage> images;
        for (const auto& p : instances)
            images.push_back(read_coseg_instance(p));
        if (!objectness.empty()) {
            if (objectness.size() != images.size())
                throw InputError("--objectness must be given once per --instance");
            for (std::size_t k = 0; k < images.size(); ++k) {
                const Matrix p = io::read_matrix(objectness[k]);
                if (p.cols() != 1 && p.rows() != 1)
                    throw InputError(objectness[k] + ": objectness must be a single row or column");
                images[k].objectness = Eigen::Map<const Vector>(p.data(), p.size());
            }
        }
        for (std::size_t k = 0; k < images.size(); ++k)
            images[k].validate(instances[k]);
        std::vector<Scribbles> marks;
        if (!scribbles.empty())
            marks = read_scribbles(scribbles, ctx.base);
        std::vector<VertexSet> truths;
        if (!gts.empty() && gts.size() != images.size())
            throw InputError("--gt must be given once per --instance");
        for (const auto& g : gts)
            truths.push_back(make_vertex_set(read_id_file(g, ctx.base)));
        const SolverParams params = solver.params();

        CosegResult r;
        std::string mode;
        if (marks.empty()) {
            if (images.size() != 2)
                throw InputError("unsupervised co-segmentation needs exactly two instances");
            mode = "unsupervised";
            r = ctx.timed("coseg", [&] { return coseg_unsupervised(images[0], images[1], params); });
        } else {
            mode = "interactive";
            r = ctx.timed("coseg", [&] { return coseg_interactive(images, marks, params); });
        }
        for (const auto& w : r.warnings)
            ctx.log(LogLevel::Info, "warning: " + w);

        Json report;
        report["command"] = "coseg";
        report["mode"] = mode;
        Json masks = Json::array();
        for (const auto& m : r.masks)
            masks.push_back(ids_to_json(m, ctx.base));
        report["masks"] = std::move(masks);
        report["o1"] = ids_to_json(r.o1, ctx.base);
        report["o2"] = ids_to_json(r.o2, ctx.base);
        report["warnings"] = r.warnings;
        if (!truths.empty()) {
            Json scores = Json::array();
            for (std::size_t k = 0; k < truths.size(); ++k)
                scores.push_back(segmentation_json(segmentation_metrics(r.masks[k], truths[k], images[k].size())));
            report["metrics"] = std::move(scores);
        }

        if (out.empty()) {
            ctx.emit(std::move(report), "");
            return kExitOk;
        }
        fs::create_directories(out);
        for (std::size_t k = 0; k < r.masks.size(); ++k) {
            std::vector<long> ids;
            for (Index i : r.masks[k])
                ids.push_back(static_cast<long>(i + ctx.base));
            io::write_integer_list(fs::path(out) / ("mask_" + std::to_string(k + ctx.base) + ".txt"), ids);
        }
        ctx.emit(std::move(report), (fs::path(out) / "report.json").string());
        return kExitOk;
    }
};

// --- diffuse -------------------------------------------------------------------

struct DiffuseCommand {
    std::string distance, affinity, labels, matrix_out, out;
    std::optional<double> sigma;
    std::string init = "A1", transition = "B6";
    std::size_t iters = 200, k = 10, bulls_eye = 0, top = 10;
    double teleport = 0.85;
    SolverOptions solver;

    void add(CLI::App* sub)
    {
        auto* d = sub->add_option("--distance", distance, "Distance matrix file");
        auto* a = sub->add_option("--affinity", affinity, "Affinity matrix file");
        d->excludes(a);
        sub->add_option("--sigma", sigma, "Kernel width for --distance input");
        sub->add_option("--init", init, "A1..A4")->capture_default_str();
        sub->add_option("--transition", transition, "B1..B6")->capture_default_str();
        sub->add_option("--iters", iters, "Diffusion iterations")->capture_default_str();
        sub->add_option("--k", k, "Neighbourhood size for kNN-based schemes")->capture_default_str();
        sub->add_option("--teleport", teleport, "B2 mixing weight")->capture_default_str();
        sub->add_option("--labels", labels, "Class label per item");
        sub->add_option("--bulls-eye", bulls_eye, "Bull's eye window R (needs --labels)");
        sub->add_option("--top", top, "Ranked ids reported per query; 0 for all")->capture_default_str();
        sub->add_option("--matrix-out", matrix_out, "Write the diffused matrix here");
        sub->add_option("--out", out, "Report file (stdout when omitted)");
        solver.add(sub);
    }

    int run(Context& ctx)
    {
        if (distance.empty() == affinity.empty())
            throw InputError("diffuse needs exactly one of --distance and --affinity");
        DiffusionConfig config;
        config.iterations = iters;
        config.init = parse_init_scheme(init);
        config.transition = parse_transition_scheme(transition);
        config.k = k;
        config.teleport = teleport;
        config.solver = solver.params();

        std::optional<AffinityMatrix> a;
        if (!affinity.empty()) {
            a = load_affinity(affinity);
        } else {
            if (!sigma)
                throw InputError("--distance input needs --sigma");
            a = distance_to_similarity(DistanceMatrix(io::read_matrix(distance)), *sigma);
        }
        std::vector<long> lab;
        if (!labels.empty()) {
            lab = read_labels(labels);
            if (lab.size() != a->size())
                throw InputError(labels + ": " + std::to_string(lab.size()) + " labels for " +
                                 std::to_string(a->size()) + " items");
        }
        if (bulls_eye > 0 && lab.empty())
            throw InputError("--bulls-eye needs --labels");
        config.validate(a->size());

        const Matrix v = ctx.timed("diffuse", [&] { return run_diffusion(*a, config); });
        if (!matrix_out.empty())
            io::write_matrix(matrix_out, v);

        Json report;
        report["command"] = "diffuse";
        report["n"] = a->size();
        report["init"] = std::string(to_string(config.init));
        report["transition"] = std::string(to_string(config.transition));
        report["iterations"] = iters;
        std::vector<RankedList> raw, diffused;
        for (Index q = 0; q < a->size(); ++q) {
            raw.push_back(rank(a->weights(), q));
            diffused.push_back(rank(v, q));
        }
        if (bulls_eye > 0) {
            Json be;
            be["r"] = bulls_eye;
            be["raw"] = mean_bulls_eye(raw, lab, bulls_eye);
            be["diffused"] = mean_bulls_eye(diffused, lab, bulls_eye);
            report["bulls_eye"] = std::move(be);
        }
        Json rankings = Json::array();
        for (const auto& r : diffused)
            rankings.push_back(ranking_to_json(r, ctx.base, top));
        report["rankings"] = std::move(rankings);
        ctx.emit(std::move(report), out);
        return kExitOk;
    }
};

// --- fuse ----------------------------------------------------------------------

struct FuseCommand {
    std::vector<std::string> channels;
    std::optional<long long> query;
    bool all_queries = false;
    double npc = 0.9, lambda = 0.7, threshold_scale = 1.0;
    std::string labels, metrics = "map,ns", out;
    std::size_t top = 10;
    SolverOptions solver;

    void add(CLI::App* sub)
    {
        sub->add_option("--channel", channels, "NAME=FILE similarity channel (repeatable)")->required();
        auto* q = sub->add_option("--query", query, "Single query id");
        auto* all = sub->add_flag("--all-queries", all_queries, "Rank every item as a query");
        q->excludes(all);
        sub->add_option("--npc", npc, "Neighbour proximity coefficient")->capture_default_str();
        sub->add_option("--lambda", lambda, "Weight of the similarity product against the votes")
            ->capture_default_str();
        sub->add_option("--threshold-scale", threshold_scale, "Scale of the outlier threshold")
            ->capture_default_str();
        sub->add_option("--labels", labels, "Class label per item");
        sub->add_option("--metrics", metrics, "Comma list of map, ns, cmc")->capture_default_str();
        sub->add_option("--top", top, "Ranked ids reported per query; 0 for all")->capture_default_str();
        sub->add_option("--out", out, "Report file (stdout when omitted)");
        solver.add(sub);
    }

    int run(Context& ctx)
    {
        if (!query && !all_queries)
            throw InputError("fuse needs --query ID or --all-queries");
        std::vector<FeatureChannel> chans;
        for (const auto& spec : channels) {
            const auto eq = spec.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
                throw InputError("--channel expects NAME=FILE, got \"" + spec + "\"");
            chans.push_back({spec.substr(0, eq), load_affinity(spec.substr(eq + 1))});
        }
        const Index n = chans.front().similarity.size();
        for (const auto& c : chans)
            if (c.similarity.size() != n)
                throw InputError("channel " + c.name + " has " + std::to_string(c.similarity.size()) +
                                 " items, expected " + std::to_string(n));
        std::vector<long> lab;
        if (!labels.empty()) {
            lab = read_labels(labels);
            if (lab.size() != n)
                throw InputError(labels + ": label count does not match the channels");
        }
        const auto wanted = split_names(metrics);
        for (const auto& m : wanted)
            if (m != "map" && m != "ns" && m != "cmc")
                throw InputError("--metrics: unknown metric \"" + m + "\"");
        FusionConfig config;
        config.npc = npc;
        config.lambda = lambda;
        config.threshold_scale = threshold_scale;
        config.solver = solver.params();
        config.validate();

        std::vector<FusionResult> results;
        if (all_queries) {
            results = ctx.timed("fuse", [&] { return retrieve_all(chans, config); });
        } else {
            if (*query < static_cast<long long>(ctx.base) || Index(*query) - ctx.base >= n)
                throw InputError("--query " + std::to_string(*query) + " is outside the gallery");
            const Index q = Index(*query) - ctx.base;
            results.push_back(ctx.timed("fuse", [&] { return retrieve(q, normalize_channels(chans), config); }));
        }

        Json report;
        report["command"] = "fuse";
        Json names = Json::array();
        for (const auto& c : chans)
            names.push_back(c.name);
        report["channels"] = std::move(names);
        Json per_query = Json::array();
        std::vector<RankedList> lists;
        for (const auto& r : results) {
            Json j = ranking_to_json(r.ranking, ctx.base, top);
            Json piw;
            for (std::size_t c = 0; c < chans.size(); ++c)
                piw[chans[c].name] = r.piw[c];
            j["piw"] = std::move(piw);
            per_query.push_back(std::move(j));
            lists.push_back(r.ranking);
        }
        report["results"] = std::move(per_query);
        if (!lab.empty()) {
            Json m;
            for (const auto& name : wanted) {
                if (name == "map") {
                    const MapResult r = mean_average_precision(lists, lab);
                    m["map"] = r.value;
                    m["map_skipped"] = r.skipped;
                } else if (name == "ns") {
                    // N-S counts the query itself, which the fused ranking leaves out.
                    std::vector<RankedList> with_self = lists;
                    for (auto& l : with_self)
                        l.ids.insert(l.ids.begin(), l.query);
                    m["ns"] = ns_score(with_self, lab);
                } else {
                    const auto c = cmc(lists, lab);
                    m["cmc@1"] = c[0];
                    m["cmc@5"] = c[1];
                }
            }
            report["metrics"] = std::move(m);
        }
        ctx.emit(std::move(report), out);
        return kExitOk;
    }
};

// --- dcds ----------------------------------------------------------------------

struct DcdsCommand {
    std::string batch, out;
    std::size_t unroll = 20, expand = 0, gradcheck_size = 5;
    double beta = 0.9, delta = 0.3, margin = 1e-4;
    bool gradcheck = false;

    void add(CLI::App* sub)
    {
        sub->add_option("--batch", batch, "Batch manifest JSON (features + labels)")->required();
        sub->add_option("--unroll", unroll, "Replicator steps per constraint")->capture_default_str();
        sub->add_option("--beta", beta, "Fusion weight")->capture_default_str();
        sub->add_option("--delta", delta, "Dissimilarity offset")->capture_default_str();
        sub->add_option("--margin", margin, "alpha margin above the eigenvalue bound")->capture_default_str();
        sub->add_flag("--gradcheck", gradcheck, "Check the unrolled Jacobian on a leading sub-batch");
        sub->add_option("--gradcheck-size", gradcheck_size, "Items in the gradient-check sub-batch (<= 8)")
            ->capture_default_str();
        sub->add_option("--expand", expand, "k-NN size for constraint-expansion ranking; 0 disables")
            ->capture_default_str();
        sub->add_option("--out", out, "Report file (stdout when omitted)");
    }

    int run(Context& ctx)
    {
        const MiniBatch b = read_batch(batch);
        FusionParams params;
        params.beta = beta;
        params.delta = delta;
        params.unroll = unroll;
        params.margin = margin;
        params.validate();
        if (gradcheck && (gradcheck_size < 2 || gradcheck_size > 8))
            throw InputError("--gradcheck-size must lie in [2, 8]");

        const AffinityMatrix a = batch_affinity(b.features);
        const Matrix y = ctx.timed("batch_cds", [&] { return batch_cds(a, params); });
        const Matrix g = target_matrix(b.labels);
        Matrix s_prime = a.weights();
        Matrix d_prime = Matrix::Ones(s_prime.rows(), s_prime.cols()) - s_prime;
        d_prime.diagonal().setZero();
        const FusedScores fused = fuse(y, s_prime, d_prime, params);

        double within = 0.0, cross = 0.0;
        for (Eigen::Index i = 0; i < y.rows(); ++i)
            for (Eigen::Index j = 0; j < y.cols(); ++j)
                if (i != j)
                    (g(i, j) > 0.5 ? within : cross) += y(i, j);

        Json report;
        report["command"] = "dcds";
        report["items"] = b.size();
        report["identities"] = b.identities;
        report["per_identity"] = b.per_identity;
        report["unroll"] = unroll;
        report["within_identity_mass"] = within;
        report["cross_identity_mass"] = cross;
        report["cross_entropy"] = pairwise_cross_entropy(fused, g);

        if (gradcheck) {
            const auto m = static_cast<Eigen::Index>(std::min<std::size_t>(gradcheck_size, b.size()));
            const AffinityMatrix sub = batch_affinity(b.features.topRows(m));
            const GradCheckReport gc = ctx.timed("gradcheck", [&] { return grad_check(sub, 0, unroll); });
            Json j;
            j["items"] = m;
            j["max_relative_error"] = gc.max_relative_error;
            j["max_abs_gradient"] = gc.max_abs_gradient;
            j["entries"] = gc.entries;
            j["finite"] = gc.finite;
            report["gradcheck"] = std::move(j);
        }
        if (expand > 0) {
            std::vector<ExpansionResult> results(b.size(), ExpansionResult{});
            ctx.timed("expand", [&] {
                parallel_for(b.size(), [&](std::size_t p) { results[p] = constraint_expansion(a, p, expand); });
            });
            std::vector<RankedList> lists;
            std::size_t hits = 0, picks = 0;
            for (const auto& r : results) {
                lists.push_back(r.ranking);
                if (r.picked) {
                    ++picks;
                    hits += b.labels[*r.picked] == b.labels[r.ranking.query];
                }
            }
            Json j;
            j["k"] = expand;
            j["map"] = mean_average_precision(lists, b.labels).value;
            j["picked"] = picks;
            j["picked_same_identity"] = hits;
            report["expansion"] = std::move(j);
        }
        ctx.emit(std::move(report), out);
        return kExitOk;
    }
};

// --- metrics -------------------------------------------------------------------

struct MetricsCommand {
    std::string rankings, labels, pred, gt, pixel_counts, which = "map,cmc,ns", out;
    std::size_t bulls_eye = 0, n = 0;

    void add(CLI::App* sub)
    {
        sub->add_option("--rankings", rankings, "Ranked-list JSON");
        sub->add_option("--labels", labels, "Class label per item");
        sub->add_option("--metrics", which, "Comma list of map, cmc, ns, bulls-eye")->capture_default_str();
        sub->add_option("--bulls-eye", bulls_eye, "Bull's eye window R");
        sub->add_option("--pred", pred, "Predicted foreground ids");
        sub->add_option("--gt", gt, "Ground-truth foreground ids");
        sub->add_option("--n", n, "Number of superpixels");
        sub->add_option("--pixel-counts", pixel_counts, "Pixels per superpixel");
        sub->add_option("--out", out, "Report file (stdout when omitted)");
    }

    int run(Context& ctx)
    {
        Json report;
        report["command"] = "metrics";
        const bool retrieval = !rankings.empty();
        const bool seg = !pred.empty();
        if (retrieval == seg)
            throw InputError("metrics needs either --rankings with --labels or --pred with --gt");
        if (retrieval) {
            if (labels.empty())
                throw InputError("--rankings needs --labels");
            const auto lists = read_rankings(rankings, ctx.base);
            const auto lab = read_labels(labels);
            for (const auto& l : lists)
                for (Index i : l.ids)
                    if (i >= lab.size() || l.query >= lab.size())
                        throw InputError(rankings + ": id outside the label range");
            for (const auto& name : split_names(which)) {
                if (name == "map") {
                    const MapResult r = mean_average_precision(lists, lab);
                    report["map"] = r.value;
                    report["map_skipped"] = r.skipped;
                } else if (name == "cmc") {
                    const auto c = cmc(lists, lab);
                    report["cmc@1"] = c[0];
                    report["cmc@5"] = c[1];
                } else if (name == "ns") {
                    report["ns"] = ns_score(lists, lab);
                } else if (name == "bulls-eye") {
                    if (bulls_eye == 0)
                        throw InputError("bulls-eye needs --bulls-eye R");
                    report["bulls_eye"] = mean_bulls_eye(lists, lab, bulls_eye);
                } else {
                    throw InputError("--metrics: unknown metric \"" + name + "\"");
                }
            }
        } else {
            if (gt.empty() || n == 0)
                throw InputError("--pred needs --gt and --n");
            const VertexSet p = make_vertex_set(read_id_file(pred, ctx.base));
            const VertexSet t = make_vertex_set(read_id_file(gt, ctx.base));
            std::vector<double> counts;
            if (!pixel_counts.empty())
                counts = read_weights(pixel_counts);
            report["segmentation"] = segmentation_json(segmentation_metrics(p, t, n, counts));
        }
        ctx.emit(std::move(report), out);
        return kExitOk;
    }
};

// --- fixtures ------------------------------------------------------------------

struct FixturesCommand {
    std::string name = "all", out;
    std::uint64_t seed = 0;

    void add(CLI::App* sub)
    {
        sub->add_option("--name", name, "g8, blobs, retrieval, segmentation, coseg, dcds or all")
            ->check(CLI::IsMember({"g8", "blobs", "retrieval", "segmentation", "coseg", "dcds", "all"}))
            ->capture_default_str();
        sub->add_option("--out", out, "Output directory")->required();
        sub->add_option("--seed", seed, "Generator seed")->capture_default_str();
    }

    static std::vector<long> to_long(const std::vector<Index>& ids, Index base)
    {
        std::vector<long> out;
        for (Index i : ids)
            out.push_back(static_cast<long>(i + base));
        return out;
    }

    int run(Context& ctx)
    {
        const fs::path dir = out;
        fs::create_directories(dir);
        Json written = Json::array();
        auto matrix = [&](const std::string& file, const Matrix& m) {
            io::write_matrix(dir / file, m);
            written.push_back(file);
        };
        auto list = [&](const std::string& file, const std::vector<long>& v) {
            io::write_integer_list(dir / file, v);
            written.push_back(file);
        };
        auto json = [&](const std::string& file, const Json& j) {
            write_json(dir / file, j);
            written.push_back(file);
        };
        const bool all = name == "all";

        if (all || name == "g8")
            matrix("g8.txt", fixtures::g8().weights());
        if (all || name == "blobs") {
            const auto b = fixtures::make_blobs(3, 10, 2, 0.08, seed);
            matrix("blobs_features.txt", b.features);
            list("blobs_labels.txt", b.labels);
        }
        if (all || name == "retrieval") {
            const auto labels = fixtures::block_labels(5, 4);
            matrix("channel_a.txt", fixtures::planted_channel(labels, 4, 0.05, 0.3, seed).weights());
            matrix("channel_b.txt",
                   fixtures::planted_channel(fixtures::shuffled(labels, seed + 1), 4, 0.05, 0.3, seed + 2).weights());
            list("retrieval_labels.txt", labels);
        }
        if (all || name == "segmentation") {
            const auto s = fixtures::make_segmentation_blobs(20, 30, 3, 8.0, seed);
            matrix("seg_features.txt", s.features.values());
            list("seg_gt.txt", to_long(s.foreground, ctx.base));
            Json ann;
            ann["mode"] = "scribble_fg_bg";
            ann["ids"] = ids_to_json({s.foreground[0], s.foreground[1], s.background[0]}, ctx.base);
            ann["labels"] = {1, 1, 0};
            json("seg_annotation.json", ann);
        }
        if (all || name == "coseg") {
            const auto c = fixtures::make_coseg_pair(6, 2, seed);
            for (std::size_t k = 0; k < c.images.size(); ++k) {
                const std::string p = "coseg" + std::to_string(k) + "_";
                matrix(p + "color.txt", c.images[k].color);
                matrix(p + "sift.txt", c.images[k].sift);
                matrix(p + "hog.txt", c.images[k].hog);
                matrix(p + "adjacency.txt", c.images[k].adjacency);
                matrix(p + "objectness.txt", c.images[k].objectness);
                list(p + "gt.txt", to_long(c.objects[k], ctx.base));
                Json inst;
                inst["color"] = p + "color.txt";
                inst["sift"] = p + "sift.txt";
                inst["hog"] = p + "hog.txt";
                inst["adjacency"] = p + "adjacency.txt";
                inst["objectness"] = p + "objectness.txt";
                json(p + "instance.json", inst);
            }
        }
        if (all || name == "dcds") {
            const auto b = fixtures::make_dcds_batch(16, 4, 32, 0.1, seed);
            matrix("dcds_features.txt", b.features);
            list("dcds_labels.txt", b.labels);
            Json manifest;
            manifest["features"] = "dcds_features.txt";
            manifest["labels"] = "dcds_labels.txt";
            json("dcds_batch.json", manifest);
        }
        Json report;
        report["command"] = "fixtures";
        report["seed"] = seed;
        report["files"] = std::move(written);
        ctx.emit(std::move(report), "");
        return kExitOk;
    }
};

void apply_config(CLI::App* sub, const std::string& path, const std::set<const CLI::Option*>& given)
{
    for (const auto& kv : read_key_value_file(path)) {
        const std::string where = path + ":" + std::to_string(kv.line);
        if (kv.key == "config")
            throw InputError(where + ": config files cannot nest");
        CLI::Option* opt = nullptr;
        try {
            opt = sub->get_option("--" + kv.key);
        } catch (const CLI::OptionNotFound&) {
            throw InputError(where + ": unknown key \"" + kv.key + "\" for " + sub->get_name());
        }
        if (given.count(opt))
            continue;
        try {
            opt->add_result(kv.value);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw InputError(where + ": " + e.what());
        }
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Constrained dominant set clustering, retrieval and segmentation toolkit", "cdskit"};
    app.require_subcommand(1);

    Context ctx;
    ctx.out = &out;
    ctx.err = &err;
    std::string level = "info";
    app.add_option("--index-base", ctx.base, "Offset of ids in inputs and reports (0 or 1)")
        ->check(CLI::Range(0, 1))
        ->capture_default_str();
    app.add_flag("--timings", ctx.timings, "Add per-stage wall-clock times to reports");
    app.add_option("--log-level", level, "quiet, info or debug")
        ->check(CLI::IsMember({"quiet", "info", "debug"}))
        ->capture_default_str();

    ClusterCommand cluster;
    SegmentCommand seg;
    CosegCommand coseg;
    DiffuseCommand diffuse;
    FuseCommand fuse;
    DcdsCommand dcds;
    MetricsCommand metrics;
    FixturesCommand fix;

    std::map<CLI::App*, std::function<int(Context&)>> runners;
    std::map<CLI::App*, std::string> configs;
    auto add = [&](const char* name, const char* help, auto& cmd) {
        CLI::App* sub = app.add_subcommand(name, help);
        cmd.add(sub);
        sub->add_option("--config", configs[sub], "key=value file; command-line flags take precedence");
        runners[sub] = [&cmd](Context& c) { return cmd.run(c); };
    };
    add("cluster", "Dominant sets or constrained dominant sets of an affinity matrix", cluster);
    add("segment", "Seeded segmentation of superpixel features", seg);
    add("coseg", "Co-segmentation of superpixel instances", coseg);
    add("diffuse", "Diffusion re-ranking over a locally constrained transition", diffuse);
    add("fuse", "Query-adaptive fusion of similarity channels", fuse);
    add("dcds", "Unrolled constrained clustering on a mini-batch", dcds);
    add("metrics", "Retrieval or segmentation scores", metrics);
    add("fixtures", "Write the built-in test graph and synthetic datasets", fix);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInputError;
    }
    ctx.level = level == "quiet" ? LogLevel::Quiet : level == "debug" ? LogLevel::Debug : LogLevel::Info;

    try {
        CLI::App* sub = app.get_subcommands().front();
        if (!configs[sub].empty()) {
            std::set<const CLI::Option*> given;
            for (const CLI::Option* o : sub->get_options())
                if (o->count() > 0)
                    given.insert(o);
            apply_config(sub, configs[sub], given);
        }
        ctx.log(LogLevel::Debug, "kernels: " + std::string(kernels::active().name));
        const int code = runners[sub](ctx);
        if (ctx.not_converged) {
            ctx.log(LogLevel::Info, "replicator dynamics hit the iteration cap before converging");
            return kExitNotConverged;
        }
        return code;
    } catch (const InputError& e) {
        err << "cdskit: input error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const ConvergenceError& e) {
        err << "cdskit: not converged: " << e.what() << '\n';
        return kExitNotConverged;
    } catch (const std::exception& e) {
        err << "cdskit: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace cdskit::app
