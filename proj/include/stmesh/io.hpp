#pragma once

// JSON formats and VTK / OBJ exporters.

#include <stmesh/decompose.hpp>
#include <stmesh/errors.hpp>
#include <stmesh/field.hpp>
#include <stmesh/isosurface.hpp>
#include <stmesh/model.hpp>
#include <stmesh/validate.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace stmesh::io {

using nlohmann::json;

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path);
    out << text;
    if (!out) throw IOError("write failed for " + path);
}

/// Parses JSON, reporting failures as "line L, offset O: ...".
inline json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < byte; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError("line " + std::to_string(line) + ", offset " + std::to_string(col) + ": " + e.what());
    }
}

namespace detail {

inline const json& field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) throw SchemaError(std::string("missing field \"") + name + "\"");
    const json& v = j.at(name);
    if (!v.is_array()) throw SchemaError(std::string("field \"") + name + "\" must be an array");
    return v;
}

template <std::size_t N, typename T>
std::array<T, N> tuple_of(const json& v, const char* name) {
    if (!v.is_array() || v.size() != N) {
        throw SchemaError(std::string("entries of \"") + name + "\" must have " + std::to_string(N) + " elements");
    }
    std::array<T, N> out{};
    try {
        for (std::size_t i = 0; i < N; ++i) out[i] = v[i].get<T>();
    } catch (const json::exception&) {
        throw SchemaError(std::string("non-numeric entry in \"") + name + "\"");
    }
    return out;
}

inline std::vector<double> numbers(const json& v, const char* name) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number()) throw SchemaError(std::string("non-numeric entry in \"") + name + "\"");
        out.push_back(x.get<double>());
    }
    return out;
}

} // namespace detail

// Mesh: {"nodes": [[x,y],...], "triangles": [[i,j,k],...]}

inline json to_json(const TriMesh2D& m) {
    json j;
    j["nodes"] = json::array();
    for (const auto& p : m.nodes) j["nodes"].push_back({p.x, p.y});
    j["triangles"] = json::array();
    for (const auto& t : m.triangles) j["triangles"].push_back({t[0], t[1], t[2]});
    return j;
}

inline TriMesh2D mesh_from_json(const json& j) {
    TriMesh2D m;
    for (const auto& v : detail::field(j, "nodes")) {
        const auto a = detail::tuple_of<2, double>(v, "nodes");
        m.nodes.push_back({a[0], a[1]});
    }
    for (const auto& v : detail::field(j, "triangles")) {
        const auto a = detail::tuple_of<3, NodeId>(v, "triangles");
        for (NodeId i : a) {
            if (i < 0 || static_cast<std::size_t>(i) >= m.nodes.size()) {
                throw SchemaError("triangle references node " + std::to_string(i) + " out of range");
            }
        }
        m.triangles.push_back(a);
    }
    return m;
}

// Next map: {"next": [j,...]}

inline json to_json(const NextNodeMap& n) { return json{{"next", n.next}}; }

inline NextNodeMap next_from_json(const json& j, std::size_t lower_nodes, std::size_t upper_nodes) {
    NextNodeMap n;
    for (const auto& v : detail::field(j, "next")) {
        if (!v.is_number_integer()) throw SchemaError("entries of \"next\" must be integers");
        n.next.push_back(v.get<NodeId>());
    }
    if (n.next.size() != lower_nodes) {
        throw SchemaError("\"next\" has " + std::to_string(n.next.size()) + " entries for " +
                          std::to_string(lower_nodes) + " nodes");
    }
    for (NodeId x : n.next) {
        if (x < 0 || static_cast<std::size_t>(x) >= upper_nodes) {
            throw SchemaError("\"next\" entry " + std::to_string(x) + " out of range");
        }
    }
    return n;
}

// Field: {"layers": [[v,...],...]}

inline json to_json(const ScalarField& f) { return json{{"layers", f.layers}}; }

inline ScalarField field_from_json(const json& j) {
    ScalarField f;
    for (const auto& l : detail::field(j, "layers")) {
        if (!l.is_array()) throw SchemaError("entries of \"layers\" must be arrays");
        f.layers.push_back(detail::numbers(l, "layers"));
    }
    return f;
}

// Tet mesh: {"nodes": [[x,y,t],...], "tets": [[a,b,c,d],...], "provenance": [...]}

inline json to_json(const TetMesh& m) {
    json j;
    j["nodes"] = json::array();
    for (const auto& p : m.nodes) j["nodes"].push_back({p.x, p.y, p.t});
    j["tets"] = json::array();
    for (const auto& t : m.tets) j["tets"].push_back({t[0], t[1], t[2], t[3]});
    j["provenance"] = m.provenance;
    return j;
}

inline TetMesh tetmesh_from_json(const json& j) {
    TetMesh m;
    for (const auto& v : detail::field(j, "nodes")) {
        const auto a = detail::tuple_of<3, double>(v, "nodes");
        m.nodes.push_back({a[0], a[1], a[2]});
    }
    for (const auto& v : detail::field(j, "tets")) {
        const auto a = detail::tuple_of<4, NodeId>(v, "tets");
        for (NodeId i : a) {
            if (i < 0 || static_cast<std::size_t>(i) >= m.nodes.size()) {
                throw SchemaError("tet references node " + std::to_string(i) + " out of range");
            }
        }
        m.tets.push_back(a);
    }
    if (j.contains("provenance")) {
        for (const auto& v : detail::field(j, "provenance")) m.provenance.push_back(v.get<int>());
        if (m.provenance.size() != m.tets.size()) throw SchemaError("\"provenance\" length differs from \"tets\"");
    }
    return m;
}

inline std::string dump(const json& j) { return j.dump() + "\n"; }

inline TriMesh2D read_mesh(const std::string& path) { return mesh_from_json(parse_json(read_text(path))); }
inline ScalarField read_field(const std::string& path) { return field_from_json(parse_json(read_text(path))); }
inline TetMesh read_tetmesh(const std::string& path) { return tetmesh_from_json(parse_json(read_text(path))); }
inline NextNodeMap read_next(const std::string& path, std::size_t lower_nodes, std::size_t upper_nodes) {
    return next_from_json(parse_json(read_text(path)), lower_nodes, upper_nodes);
}

template <typename T>
void write_json(const std::string& path, const T& x) {
    write_text(path, dump(to_json(x)));
}

inline json to_json(const ValidationReport& r) {
    json j;
    j["passed"] = r.passed();
    j["tet_volume"] = r.tet_volume;
    j["boundary_volume"] = r.boundary_volume;
    j["checks"] = json::array();
    for (const auto& c : r.checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"message", c.message}});
    return j;
}

inline json to_json(const Decomposition& d) {
    json j;
    j["faces"] = json::array();
    for (const auto& f : d.faces) j["faces"].push_back({{"lower", f.lower}, {"upper", f.upper}});
    j["partitions"] = json::array();
    for (const auto& p : d.partitions) {
        json e;
        e["id"] = p.id;
        e["lower_triangles"] = p.lower_tris;
        e["upper_triangles"] = p.upper_tris;
        e["faces"] = p.faces;
        e["lower_nodes"] = p.lower_nodes;
        e["upper_nodes"] = p.upper_nodes;
        e["temporal_edges"] = json::array();
        for (const auto& [a, b] : p.temporal_edges) e["temporal_edges"].push_back({a, b});
        j["partitions"].push_back(std::move(e));
    }
    return j;
}

namespace detail {

inline std::ostringstream vtk_stream() {
    std::ostringstream os;
    os << std::setprecision(17);
    return os;
}

inline void vtk_scalars(std::ostringstream& os, const std::string& name, const std::vector<double>& v) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double x : v) os << x << "\n";
}

} // namespace detail

struct NamedField {
    std::string name;
    std::vector<double> values;
};

/// Legacy ASCII UNSTRUCTURED_GRID; the time coordinate becomes z.
inline std::string vtk_unstructured(const TetMesh& m, const std::vector<NamedField>& fields = {}) {
    for (const auto& f : fields) {
        if (f.values.size() != m.nodes.size()) throw SchemaError("field " + f.name + " is not aligned with nodes");
    }
    auto os = detail::vtk_stream();
    os << "# vtk DataFile Version 3.0\nstmesh tetrahedra\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << m.nodes.size() << " double\n";
    for (const auto& p : m.nodes) os << p.x << " " << p.y << " " << p.t << "\n";
    os << "CELLS " << m.tets.size() << " " << 5 * m.tets.size() << "\n";
    for (const auto& t : m.tets) os << "4 " << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
    os << "CELL_TYPES " << m.tets.size() << "\n";
    for (std::size_t i = 0; i < m.tets.size(); ++i) os << "10\n";
    if (!m.provenance.empty()) {
        os << "CELL_DATA " << m.tets.size() << "\nSCALARS partition int 1\nLOOKUP_TABLE default\n";
        for (int p : m.provenance) os << p << "\n";
    }
    if (!fields.empty()) {
        os << "POINT_DATA " << m.nodes.size() << "\n";
        for (const auto& f : fields) detail::vtk_scalars(os, f.name, f.values);
    }
    return os.str();
}

inline std::string vtk_structured(const Grid3& g, const std::string& name = "value") {
    auto os = detail::vtk_stream();
    os << "# vtk DataFile Version 3.0\nstmesh resampled grid\nASCII\nDATASET STRUCTURED_POINTS\n";
    os << "DIMENSIONS " << g.dims[0] << " " << g.dims[1] << " " << g.dims[2] << "\n";
    os << "ORIGIN " << g.origin.x << " " << g.origin.y << " " << g.origin.t << "\n";
    os << "SPACING " << g.spacing.x << " " << g.spacing.y << " " << g.spacing.t << "\n";
    os << "POINT_DATA " << g.values.size() << "\n";
    detail::vtk_scalars(os, name, g.values);
    os << "SCALARS mask unsigned_char 1\nLOOKUP_TABLE default\n";
    for (auto m : g.mask) os << static_cast<int>(m) << "\n";
    return os.str();
}

inline std::string vtk_polydata(const IsoSurface& s) {
    auto os = detail::vtk_stream();
    os << "# vtk DataFile Version 3.0\nstmesh isosurface\nASCII\nDATASET POLYDATA\n";
    os << "POINTS " << s.vertices.size() << " double\n";
    for (const auto& p : s.vertices) os << p.x << " " << p.y << " " << p.t << "\n";
    os << "POLYGONS " << s.triangles.size() << " " << 4 * s.triangles.size() << "\n";
    for (const auto& t : s.triangles) os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    return os.str();
}

inline std::string obj(const IsoSurface& s) {
    auto os = detail::vtk_stream();
    for (const auto& p : s.vertices) os << "v " << p.x << " " << p.y << " " << p.t << "\n";
    for (const auto& t : s.triangles) os << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    return os.str();
}

} // namespace stmesh::io
