#include "support.hpp"

#include <stmesh/io.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <unistd.h>
#include <sstream>

using namespace stmesh;
using namespace testsupport;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto d = std::filesystem::temp_directory_path() / ("stmesh_io_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d / name;
}

} // namespace

TEST(Json, MeshRoundTripIsExact) {
    const auto m = generate_disk_mesh(200, 3);
    const auto path = scratch("mesh.json").string();
    io::write_json(path, m);
    const auto r = io::read_mesh(path);
    EXPECT_EQ(r.nodes, m.nodes);
    EXPECT_EQ(r.triangles, m.triangles);
    EXPECT_EQ(io::dump(io::to_json(r)), io::read_text(path));
}

TEST(Json, NextFieldAndTetMeshRoundTrip) {
    const auto sc = make_synthetic(100, 3, 4);
    const auto tm = mesh_spacetime_sequence(sc.seq);
    const auto a = io::tetmesh_from_json(io::parse_json(io::dump(io::to_json(tm))));
    EXPECT_EQ(a, tm);
    const auto f = io::field_from_json(io::parse_json(io::dump(io::to_json(sc.field))));
    EXPECT_EQ(f.layers, sc.field.layers);
    const auto n = sc.seq.layers[0].nodes.size();
    const auto nm = io::next_from_json(io::parse_json(io::dump(io::to_json(sc.seq.nexts[0]))), n, n);
    EXPECT_EQ(nm.next, sc.seq.nexts[0].next);
}

TEST(Json, TruncatedFileIsParseError) {
    const std::string text = io::dump(io::to_json(generate_disk_mesh(50, 1)));
    try {
        io::parse_json(text.substr(0, text.size() / 2));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
    }
}

TEST(Json, MissingFieldIsSchemaError) {
    try {
        io::mesh_from_json(io::parse_json(R"({"nodes": [[0, 0]]})"));
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("triangles"), std::string::npos);
    }
}

TEST(Json, ShortNextIsSchemaError) {
    EXPECT_THROW(io::next_from_json(io::parse_json(R"({"next": [0, 1]})"), 3, 3), SchemaError);
    EXPECT_THROW(io::next_from_json(io::parse_json(R"({"next": [0, 1, 7]})"), 3, 3), Error);
}

TEST(Json, MissingFileIsIOError) {
    EXPECT_THROW(io::read_text("/nonexistent/stmesh/mesh.json"), IOError);
}

TEST(Vtk, SingleTet) {
    const TetMesh m{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 1, 2, 3}}, {0}};
    const auto s = io::vtk_unstructured(m, {{"value", {1, 2, 3, 4}}});
    EXPECT_EQ(s.rfind("# vtk DataFile Version 3.0\n", 0), 0u);
    EXPECT_NE(s.find("POINTS 4 double"), std::string::npos);
    EXPECT_NE(s.find("CELLS 1 5"), std::string::npos);
    EXPECT_NE(s.find("CELL_TYPES 1\n10\n"), std::string::npos);
    EXPECT_NE(s.find("POINT_DATA 4"), std::string::npos);
    EXPECT_NE(s.find("SCALARS value double"), std::string::npos);
}

TEST(Vtk, StaircaseMeshHasThreeTCells) {
    std::mt19937_64 rng(111);
    const auto m = random_grid_mesh(3, 3, rng);
    NextNodeMap id;
    for (NodeId v = 0; v < static_cast<NodeId>(m.nodes.size()); ++v) id.next.push_back(v);
    const auto tm = mesh_spacetime(build_layer_pair(m, m, id, 1.0));
    const auto s = io::vtk_unstructured(tm);
    std::ostringstream want;
    want << "CELL_TYPES " << 3 * m.triangles.size() << "\n";
    EXPECT_NE(s.find(want.str()), std::string::npos);
}

TEST(Vtk, SeventeenDigitsAndDeterministic) {
    const TetMesh m{{{0.1, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1.0 / 3.0}}, {{0, 1, 2, 3}}, {0}};
    const auto a = io::vtk_unstructured(m);
    EXPECT_EQ(a, io::vtk_unstructured(m));
    EXPECT_NE(a.find("0.33333333333333331"), std::string::npos);
}

TEST(Vtk, StructuredAndPolydata) {
    Grid3 g;
    g.dims = {2, 2, 2};
    g.spacing = {1, 1, 1};
    g.values.assign(8, 1.0);
    g.mask.assign(8, 1);
    const auto s = io::vtk_structured(g);
    EXPECT_NE(s.find("DATASET STRUCTURED_POINTS"), std::string::npos);
    EXPECT_NE(s.find("DIMENSIONS 2 2 2"), std::string::npos);
    IsoSurface iso;
    iso.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    iso.triangles = {{0, 1, 2}};
    EXPECT_NE(io::vtk_polydata(iso).find("POLYGONS 1 4"), std::string::npos);
    EXPECT_NE(io::obj(iso).find("f 1 2 3"), std::string::npos);
}
