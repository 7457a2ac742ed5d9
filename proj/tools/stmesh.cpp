// stmesh command-line tool.

#include <stmesh/field.hpp>
#include <stmesh/io.hpp>
#include <stmesh/isosurface.hpp>
#include <stmesh/mesher.hpp>
#include <stmesh/synthetic.hpp>
#include <stmesh/validate.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace stmesh;
using io::json;

namespace {

struct Global {
    std::optional<double> dt;
    double eps = 1e-12;
    std::uint64_t seed = 1;
    int threads = 1;
    long budget = 10000;
    std::string dump_partitions;
    std::string trace_conquer;
};

MesherConfig mesher_config(const Global& g, std::vector<std::string>* trace) {
    MesherConfig c;
    c.tol.eps_rel = g.eps;
    c.threads = g.threads;
    c.budget = g.budget;
    c.trace = trace;
    return c;
}

// Manifest: {"dt": 1, "t0": 0, "layers": ["mesh.json", ...], "nexts": ["next.json", ...]}
// Paths are relative to the manifest.
LayerSequence read_sequence(const std::string& path, const Global& g) {
    const json j = io::parse_json(io::read_text(path));
    const fs::path base = fs::path(path).parent_path();
    LayerSequence s;
    s.dt = g.dt.value_or(j.value("dt", 1.0));
    s.t0 = j.value("t0", 0.0);
    for (const auto& f : io::detail::field(j, "layers")) s.layers.push_back(io::read_mesh((base / f.get<std::string>()).string()));
    const auto& nx = io::detail::field(j, "nexts");
    if (nx.size() + 1 != s.layers.size()) throw SchemaError("\"nexts\" must have one entry fewer than \"layers\"");
    for (std::size_t i = 0; i < nx.size(); ++i) {
        s.nexts.push_back(io::read_next((base / nx[i].get<std::string>()).string(), s.layers[i].nodes.size(),
                                        s.layers[i + 1].nodes.size()));
    }
    for (const auto& l : s.layers) l.validate();
    return s;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    io::write_text(path, text);
}

std::string format_db(double x) {
    if (std::isinf(x)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steiner-free tetrahedralization of deforming spacetime, with PL interpolation tools"};
    app.require_subcommand(1);
    Global g;
    app.add_option("--dt", g.dt, "Time step between layers");
    app.add_option("--eps", g.eps, "Relative geometric tolerance");
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--budget", g.budget, "Conquer search budget (visited states)");
    app.add_option("--dump-partitions", g.dump_partitions, "Write the decomposition of each slab as JSON");
    app.add_option("--trace-conquer", g.trace_conquer, "Write the conquer search log");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate the rotating-blob case");
    int nodes = 1000, layers = 16;
    std::string out_dir = ".";
    BlobParams params;
    synth->add_option("--nodes", nodes, "Target node count")->check(CLI::Range(16, 10000000));
    synth->add_option("--layers", layers, "Layer count")->check(CLI::Range(2, 100000));
    synth->add_option("--blob-radius", params.A, "Distance of the blob centers from the origin");
    synth->add_option("--omega", params.omega, "Angular speed per layer");
    synth->add_option("-o,--out", out_dir, "Output directory");

    // mesh
    auto* mesh = app.add_subcommand("mesh", "Tetrahedralize a layer sequence");
    std::string seq_path, tets_path, out_path;
    mesh->add_option("--sequence", seq_path, "Sequence manifest")->required();
    mesh->add_option("-o,--out", out_path, "Output tet mesh JSON")->required();
    bool identity = false;
    mesh->add_flag("--identity", identity, "Ignore the next maps and connect every node to itself (SL mesh)");

    // validate
    auto* validate = app.add_subcommand("validate", "Check a tet mesh against its sequence");
    std::string report_path;
    validate->add_option("--sequence", seq_path, "Sequence manifest")->required();
    validate->add_option("--tets", tets_path, "Tet mesh JSON")->required();
    validate->add_option("--report", report_path, "Write the report as JSON");

    // interp
    auto* interp = app.add_subcommand("interp", "Interpolate the field at spacetime points");
    std::string field_path, points_path, method = "pl";
    interp->add_option("--tets", tets_path, "Tet mesh JSON (PL or SL mesh)");
    interp->add_option("--sequence", seq_path, "Sequence manifest (MF only)");
    interp->add_option("--field", field_path, "Field JSON")->required();
    interp->add_option("--points", points_path, "JSON array of [x, y, t]")->required();
    interp->add_option("--method", method, "pl | mf")->check(CLI::IsMember({"pl", "mf"}));
    interp->add_option("--omega", params.omega, "Rotation speed of the analytic flow (MF)");
    interp->add_option("-o,--out", out_path, "Output JSON (default stdout)");

    // upsample
    auto* up = app.add_subcommand("upsample", "Virtual layer at an intermediate time");
    double t_query = 0.0;
    up->add_option("--sequence", seq_path, "Sequence manifest")->required();
    up->add_option("--tets", tets_path, "Tet mesh JSON")->required();
    up->add_option("--field", field_path, "Field JSON")->required();
    up->add_option("-t,--time", t_query, "Query time")->required();
    up->add_option("-o,--out", out_path, "Output JSON {\"values\": [...], \"mask\": [...]}")->required();

    // resample
    auto* resample = app.add_subcommand("resample", "Sample the PL field on a regular grid");
    std::array<int, 3> res{64, 64, 64};
    resample->add_option("--tets", tets_path, "Tet mesh JSON")->required();
    resample->add_option("--field", field_path, "Field JSON")->required();
    resample->add_option("--res", res, "Grid resolution in x, y, t");
    resample->add_option("-o,--out", out_path, "Output VTK structured points")->required();

    // isosurface
    auto* iso = app.add_subcommand("isosurface", "Marching tetrahedra");
    std::optional<double> isovalue;
    iso->add_option("--tets", tets_path, "Tet mesh JSON")->required();
    iso->add_option("--field", field_path, "Field JSON")->required();
    iso->add_option("--iso", isovalue, "Isovalue (default: half the field max)");
    iso->add_option("-o,--out", out_path, "Output .vtk or .obj")->required();

    // eval-psnr
    auto* ev = app.add_subcommand("eval-psnr", "PSNR of PL (and optionally SL) against the analytic blobs");
    int per_interval = 64;
    std::string sl_path;
    ev->add_option("--sequence", seq_path, "Sequence manifest")->required();
    ev->add_option("--tets", tets_path, "Tet mesh JSON")->required();
    ev->add_option("--field", field_path, "Field JSON")->required();
    ev->add_option("--sl-tets", sl_path, "Identity-connectivity tet mesh JSON");
    ev->add_option("--queries", per_interval, "Query times per interval")->check(CLI::PositiveNumber);
    ev->add_option("--blob-radius", params.A, "Blob-center radius of the ground truth");
    ev->add_option("--omega", params.omega, "Angular speed of the ground truth");
    ev->add_option("-o,--out", out_path, "Output JSON (default stdout)");

    // export-vtk
    auto* ex = app.add_subcommand("export-vtk", "Write a tet mesh as VTK unstructured grid");
    ex->add_option("--tets", tets_path, "Tet mesh JSON")->required();
    ex->add_option("--field", field_path, "Field JSON");
    ex->add_option("-o,--out", out_path, "Output .vtk")->required();

    app.fallthrough();
    CLI11_PARSE(app, argc, argv);

    std::vector<std::string> trace;
    auto finish_trace = [&] {
        if (!g.trace_conquer.empty()) write_lines(g.trace_conquer, trace);
    };

    try {
        if (*synth) {
            const auto sc = make_synthetic(nodes, layers, g.seed, params, g.dt.value_or(1.0));
            fs::create_directories(out_dir);
            const fs::path d(out_dir);
            io::write_json((d / "mesh.json").string(), sc.seq.layers[0]);
            io::write_json((d / "next.json").string(), sc.seq.nexts[0]);
            io::write_json((d / "field.json").string(), sc.field);
            json man;
            man["dt"] = sc.seq.dt;
            man["t0"] = sc.seq.t0;
            man["layers"] = std::vector<std::string>(layers, "mesh.json");
            man["nexts"] = std::vector<std::string>(layers - 1, "next.json");
            man["blob_radius"] = params.A;
            man["omega"] = params.omega;
            io::write_text((d / "sequence.json").string(), io::dump(man));
            std::cout << "nodes per layer: " << sc.seq.layers[0].nodes.size()
                      << ", triangles: " << sc.seq.layers[0].triangles.size() << ", layers: " << layers << "\n";
            return 0;
        }
        if (*mesh) {
            const auto seq = read_sequence(seq_path, g);
            std::vector<MeshStats> stats;
            const auto cfg = mesher_config(g, g.trace_conquer.empty() ? nullptr : &trace);
            const TetMesh m = identity ? build_sl_mesh(seq, cfg) : mesh_spacetime_sequence(seq, cfg, &stats);
            finish_trace();
            io::write_json(out_path, m);
            if (!g.dump_partitions.empty()) {
                json j = json::array();
                for (const auto& s : stats) j.push_back(io::to_json(s.decomposition));
                io::write_text(g.dump_partitions, io::dump(j));
            }
            std::size_t parts = 0, prisms = 0, qip = 0, retried = 0;
            for (const auto& s : stats) {
                parts += s.partitions;
                prisms += s.prisms;
                qip += s.quasi_ill_posed;
                retried += s.retried;
            }
            std::cout << "tets: " << m.tets.size() << ", partitions: " << parts << ", prisms: " << prisms
                      << ", quasi-ill-posed: " << qip << ", retried: " << retried << "\n";
            return 0;
        }
        if (*validate) {
            const auto seq = read_sequence(seq_path, g);
            const auto m = io::read_tetmesh(tets_path);
            Tolerance tol;
            tol.eps_rel = g.eps;
            const auto rep = validate_tetmesh(m, seq, tol);
            if (!report_path.empty()) io::write_text(report_path, io::dump(io::to_json(rep)));
            std::cout << rep.summary() << "\n";
            return rep.passed() ? 0 : 1;
        }
        if (*interp) {
            const auto f = io::read_field(field_path);
            const json pj = io::parse_json(io::read_text(points_path));
            if (!pj.is_array()) throw SchemaError("points file must be an array of [x, y, t]");
            std::vector<std::array<double, 3>> pts;
            for (const auto& v : pj) pts.push_back(io::detail::tuple_of<3, double>(v, "points"));
            std::vector<double> vals(pts.size());
            if (method == "pl") {
                if (tets_path.empty()) throw Error("--tets is required for pl");
                const auto m = io::read_tetmesh(tets_path);
                const auto flat = f.flatten();
                if (flat.size() != m.nodes.size()) throw SchemaError("field is not aligned with the tet mesh nodes");
                const PointLocator loc(m);
                parallel_for(pts.size(), g.threads,
                             [&](std::size_t i) { vals[i] = interp_pl(flat, loc, {pts[i][0], pts[i][1]}, pts[i][2]); });
            } else {
                if (seq_path.empty()) throw Error("--sequence is required for mf");
                const auto seq = read_sequence(seq_path, g);
                const MFInterpolator mf(seq, f, analytic_flow(params.omega));
                parallel_for(pts.size(), g.threads,
                             [&](std::size_t i) { vals[i] = mf({pts[i][0], pts[i][1]}, pts[i][2]); });
            }
            const std::string text = io::dump(json{{"values", vals}});
            if (out_path.empty()) std::cout << text; else io::write_text(out_path, text);
            return 0;
        }
        if (*up) {
            const auto seq = read_sequence(seq_path, g);
            const auto m = io::read_tetmesh(tets_path);
            const auto f = io::read_field(field_path);
            f.check(seq);
            const PointLocator loc(m);
            const double s = (t_query - seq.t0) / seq.dt;
            const auto layer = static_cast<std::size_t>(
                std::clamp(std::floor(s), 0.0, static_cast<double>(seq.layers.size() - 1)));
            // Boundary nodes can fall outside the deformed hull between layers.
            const auto vals = upsample_masked(f.flatten(), loc, seq.layers[layer], t_query, g.threads);
            io::write_text(out_path, io::dump(json{{"time", t_query}, {"layer", layer}, {"values", vals.values},
                                                   {"mask", vals.mask}}));
            return 0;
        }
        if (*resample) {
            const auto m = io::read_tetmesh(tets_path);
            const auto flat = io::read_field(field_path).flatten();
            if (flat.size() != m.nodes.size()) throw SchemaError("field is not aligned with the tet mesh nodes");
            const PointLocator loc(m);
            Point3 lo = m.nodes[0], hi = lo;
            for (const auto& p : m.nodes) {
                lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.t, p.t)};
                hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.t, p.t)};
            }
            const auto grid = resample_grid(
                [&](const Point2& p, double t) { return interp_pl(flat, loc, p, t); }, lo, hi, res, g.threads);
            io::write_text(out_path, io::vtk_structured(grid));
            return 0;
        }
        if (*iso) {
            const auto m = io::read_tetmesh(tets_path);
            const auto flat = io::read_field(field_path).flatten();
            if (flat.size() != m.nodes.size()) throw SchemaError("field is not aligned with the tet mesh nodes");
            double level = 0.0;
            if (isovalue) {
                level = *isovalue;
            } else {
                for (double v : flat) level = std::max(level, v);
                level *= 0.5;
            }
            const auto s = marching_tets(m, flat, level, g.threads);
            const bool as_obj = fs::path(out_path).extension() == ".obj";
            io::write_text(out_path, as_obj ? io::obj(s) : io::vtk_polydata(s));
            std::cout << "isovalue: " << level << ", vertices: " << s.vertices.size()
                      << ", triangles: " << s.triangles.size()
                      << ", interior open edges: " << interior_open_edges(m, s) << "\n";
            return 0;
        }
        if (*ev) {
            const auto seq = read_sequence(seq_path, g);
            const auto f = io::read_field(field_path);
            f.check(seq);
            const auto flat = f.flatten();
            const auto m = io::read_tetmesh(tets_path);
            const PointLocator loc(m);
            std::optional<TetMesh> sl;
            std::optional<PointLocator> sl_loc;
            if (!sl_path.empty()) {
                sl = io::read_tetmesh(sl_path);
                sl_loc.emplace(*sl);
            }
            json rows = json::array();
            for (std::size_t i = 0; i + 1 < seq.layers.size(); ++i) {
                for (int q = 0; q < per_interval; ++q) {
                    const double s = static_cast<double>(i) + static_cast<double>(q) / per_interval;
                    const double t = seq.t0 + s * seq.dt;
                    const auto& layer = seq.layers[i];
                    // Compare only nodes inside every mesh under test.
                    const auto pl = upsample_masked(flat, loc, layer, t, g.threads);
                    std::optional<MaskedValues> slv;
                    if (sl_loc) slv = upsample_masked(flat, *sl_loc, layer, t, g.threads);
                    std::vector<double> truth, a, b;
                    for (std::size_t k = 0; k < layer.nodes.size(); ++k) {
                        if (!pl.mask[k] || (slv && !slv->mask[k])) continue;
                        truth.push_back(eval_blobs(layer.nodes[k].x, layer.nodes[k].y, s, params));
                        a.push_back(pl.values[k]);
                        if (slv) b.push_back(slv->values[k]);
                    }
                    json row{{"time", t}, {"compared_nodes", truth.size()}};
                    const auto r = psnr(truth, a);
                    row["pl_mse"] = r.mse;
                    row["pl_psnr"] = format_db(r.psnr_db);
                    if (slv) {
                        const auto rs = psnr(truth, b);
                        row["sl_mse"] = rs.mse;
                        row["sl_psnr"] = format_db(rs.psnr_db);
                    }
                    rows.push_back(std::move(row));
                }
            }
            const std::string text = rows.dump(1) + "\n";
            if (out_path.empty()) std::cout << text; else io::write_text(out_path, text);
            return 0;
        }
        if (*ex) {
            const auto m = io::read_tetmesh(tets_path);
            std::vector<io::NamedField> fields;
            if (!field_path.empty()) fields.push_back({"value", io::read_field(field_path).flatten()});
            io::write_text(out_path, io::vtk_unstructured(m, fields));
            return 0;
        }
    } catch (const stmesh::Error& e) {
        finish_trace();
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
