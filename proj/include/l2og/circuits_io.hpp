// Copyright 2026 The l2og Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Text and JSON file formats for Hamiltonians, graphs and task specs.

#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "l2og/circuits.hpp"
#include "l2og/sim.hpp"

namespace l2og {

using Json = nlohmann::json;

struct FileNotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string read_text_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileNotFound("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path &path,
                            std::string_view text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

inline Json read_json_file(const std::filesystem::path &path) {
    const std::string text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

namespace circuits {

/// Parses `<coefficient> <token>...` lines; tokens are `I` or `<P><index>`.
/// `#` starts a comment. Returns the sum and 1 + the largest qubit index.
inline std::pair<PauliSum, std::size_t>
parse_hamiltonian(std::string_view text) {
    PauliSum h;
    std::size_t line_no = 0;
    std::size_t n_qubits = 1;
    std::istringstream lines{std::string(text)};
    std::string line;
    while (std::getline(lines, line)) {
        ++line_no;
        const auto where = "line " + std::to_string(line_no) + ": ";
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream toks(line);
        std::string tok;
        if (!(toks >> tok)) {
            continue;
        }
        double coeff = 0.0;
        {
            const char *b = tok.data();
            const char *e = tok.data() + tok.size();
            if (*b == '+') {
                ++b;
            }
            auto [ptr, ec] = std::from_chars(b, e, coeff);
            if (ec != std::errc() || ptr != e) {
                throw ParseError(where + "bad coefficient '" + tok + "'");
            }
            if (!std::isfinite(coeff)) {
                throw ParseError(where + "non-finite coefficient");
            }
        }
        std::vector<std::pair<std::size_t, Pauli>> ops;
        bool any = false;
        while (toks >> tok) {
            any = true;
            if (tok == "I") {
                continue;
            }
            Pauli p;
            switch (tok[0]) {
            case 'X':
                p = Pauli::X;
                break;
            case 'Y':
                p = Pauli::Y;
                break;
            case 'Z':
                p = Pauli::Z;
                break;
            default:
                throw ParseError(where + "unknown Pauli token '" + tok + "'");
            }
            std::size_t q = 0;
            auto [ptr, ec] =
                std::from_chars(tok.data() + 1, tok.data() + tok.size(), q);
            if (tok.size() < 2 || ec != std::errc() ||
                ptr != tok.data() + tok.size()) {
                throw ParseError(where + "bad qubit index in '" + tok + "'");
            }
            if (q >= sim::kMaxQubits) {
                throw ParseError(where + "qubit index too large");
            }
            ops.emplace_back(q, p);
            n_qubits = std::max(n_qubits, q + 1);
        }
        if (!any) {
            throw ParseError(where + "term has no operator tokens");
        }
        try {
            h.terms.emplace_back(coeff, std::move(ops));
        } catch (const std::invalid_argument &e) {
            throw ParseError(where + e.what());
        }
    }
    if (h.terms.empty()) {
        throw ParseError("Hamiltonian has no terms");
    }
    return {std::move(h), n_qubits};
}

inline std::pair<PauliSum, std::size_t>
load_hamiltonian(const std::filesystem::path &path) {
    try {
        return parse_hamiltonian(read_text_file(path));
    } catch (const ParseError &e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline Graph graph_from_json(const Json &j) {
    try {
        Graph g;
        g.n_vertices = j.at("vertices").get<std::size_t>();
        for (const auto &e : j.at("edges")) {
            if (e.size() < 2 || e.size() > 3) {
                throw ParseError("edge must be [i, j] or [i, j, w]");
            }
            std::size_t a = e[0].get<std::size_t>();
            std::size_t b = e[1].get<std::size_t>();
            if (a > b) {
                std::swap(a, b);
            }
            g.edges.push_back({a, b, e.size() == 3 ? e[2].get<double>() : 1.0});
        }
        g.validate();
        return g;
    } catch (const Json::exception &e) {
        throw ParseError(std::string("graph: ") + e.what());
    } catch (const std::invalid_argument &e) {
        throw ParseError(std::string("graph: ") + e.what());
    } catch (const std::out_of_range &e) {
        throw ParseError(std::string("graph: ") + e.what());
    }
}

inline Json graph_to_json(const Graph &g) {
    Json edges = Json::array();
    for (const auto &e : g.edges) {
        edges.push_back({e.i, e.j, e.weight});
    }
    return Json{{"vertices", g.n_vertices}, {"edges", edges}};
}

inline Graph load_graph(const std::filesystem::path &path) {
    return graph_from_json(read_json_file(path));
}

/// Builds a task from a spec object. Relative file paths resolve against
/// `base_dir`. See README for the schema.
inline Task task_from_json(const Json &spec,
                           const std::filesystem::path &base_dir = {}) {
    auto resolve = [&](const std::string &p) {
        std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    Task t;
    try {
        const std::string kind = spec.at("kind").get<std::string>();
        if (kind == "random_pqc") {
            t = build_random_pqc(spec.at("n_qubits").get<std::size_t>(),
                                 spec.at("layers").get<std::size_t>(),
                                 spec.value("seed", std::uint64_t{0}));
        } else if (kind == "vqe_hea") {
            const std::string src = spec.at("hamiltonian").get<std::string>();
            auto [h, n] = load_hamiltonian(resolve(src));
            n = spec.value("n_qubits", n);
            t = build_vqe_hea(h, n, spec.at("layers").get<std::size_t>());
            t.hamiltonian_source = src;
        } else if (kind == "qaoa_maxcut") {
            Graph g;
            const auto &gs = spec.at("graph");
            if (gs.is_string()) {
                g = load_graph(resolve(gs.get<std::string>()));
            } else if (gs.contains("er")) {
                const auto &er = gs.at("er");
                g = gen_er_graph(er.at("vertices").get<std::size_t>(),
                                 er.at("p").get<double>(),
                                 er.value("seed", std::uint64_t{0}));
            } else {
                g = graph_from_json(gs);
            }
            t = build_qaoa_maxcut(g, spec.at("p_layer").get<std::size_t>());
        } else if (kind == "qaoa_sk") {
            t = build_qaoa_sk(spec.at("n").get<std::size_t>(),
                              spec.at("p_layer").get<std::size_t>(),
                              spec.value("seed", std::uint64_t{0}));
        } else if (kind == "reupload") {
            double radius = balanced_radius();
            if (spec.contains("radius")) {
                const auto &r = spec.at("radius");
                if (r.is_string()) {
                    const auto name = r.get<std::string>();
                    if (name == "balanced") {
                        radius = balanced_radius();
                    } else if (name == "sqrt2") {
                        radius = std::sqrt(2.0);
                    } else {
                        throw ParseError("unknown radius preset '" + name +
                                         "'");
                    }
                } else {
                    radius = r.get<double>();
                }
            }
            t = build_reupload(spec.at("layers").get<std::size_t>(),
                               spec.value("n_train", std::size_t{200}),
                               spec.value("n_test", std::size_t{4000}),
                               spec.value("data_seed", std::uint64_t{0}),
                               radius);
        } else {
            throw ParseError("unknown task kind '" + kind + "'");
        }
    } catch (const Json::exception &e) {
        throw ParseError(std::string("task spec: ") + e.what());
    }
    if (spec.contains("id")) {
        t.id = spec.at("id").get<std::string>();
    }
    return t;
}

inline Task load_task(const std::filesystem::path &path) {
    return task_from_json(read_json_file(path), path.parent_path());
}

} // namespace circuits
} // namespace l2og
