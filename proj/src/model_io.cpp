#include "keysynth/model_io.hpp"

#include <json.hpp>

#include "keysynth/errors.hpp"
#include "keysynth/io.hpp"

namespace keysynth {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "keysynth-model";
constexpr int kVersion = 1;

std::vector<double> vec_from_json(const json& j) {
    return j.get<std::vector<double>>();
}

json mat_to_json(const nn::Mat& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"a", m.a}};
}

nn::Mat mat_from_json(const json& j) {
    nn::Mat m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.a = vec_from_json(j.at("a"));
    if (m.a.size() != m.rows * m.cols)
        throw IoError("model file: matrix payload size mismatch");
    return m;
}

json kde_to_json(const KdeModel& m) {
    return json{{"bandwidth", m.bandwidth}, {"points", m.points}};
}

KdeModel kde_from_json(const json& j) {
    KdeModel m;
    m.bandwidth = j.at("bandwidth").get<double>();
    m.points = vec_from_json(j.at("points"));
    return m;
}

json features_to_json(const FeatureModels& f) {
    json arr = json::array();
    for (const KdeModel& m : f)
        arr.push_back(kde_to_json(m));
    return arr;
}

FeatureModels features_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4)
        throw IoError("model file: expected 4 feature densities");
    FeatureModels f;
    for (std::size_t k = 0; k < 4; ++k)
        f[k] = kde_from_json(j[k]);
    return f;
}

json dense_to_json(const nn::Dense& d) {
    return json{{"W", mat_to_json(d.W)}, {"b", d.b}};
}

void dense_from_json(const json& j, nn::Dense& d, nn::Act act) {
    d.W = mat_from_json(j.at("W"));
    d.b = vec_from_json(j.at("b"));
    d.act = act;
    if (d.b.size() != d.W.rows)
        throw IoError("model file: dense bias size mismatch");
}

json gnn_net_to_json(const GnnNet& net) {
    return json{{"l1", dense_to_json(net.l1)},
                {"l2", dense_to_json(net.l2)},
                {"mu_head", dense_to_json(net.mu_head)},
                {"sigma_head", dense_to_json(net.sigma_head)}};
}

GnnNet gnn_net_from_json(const json& j) {
    GnnNet net;
    dense_from_json(j.at("l1"), net.l1, nn::Act::tanh_fn);
    dense_from_json(j.at("l2"), net.l2, nn::Act::tanh_fn);
    dense_from_json(j.at("mu_head"), net.mu_head, nn::Act::linear);
    dense_from_json(j.at("sigma_head"), net.sigma_head, nn::Act::softplus_fn);
    return net;
}

json envelope(const char* kind) {
    return json{{"format", kFormat}, {"version", kVersion}, {"kind", kind}};
}

json parse_envelope(const std::string& path, const char* expected_family) {
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw IoError("model file " + path + ": " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != kFormat)
        throw IoError("model file " + path + ": not a " + kFormat + " file");
    if (j.value("version", 0) != kVersion)
        throw IoError("model file " + path + ": unsupported version");
    if (!j.contains(expected_family))
        throw IoError("model file " + path + ": holds a different model family");
    return j;
}

void write_model(const std::string& path, const json& j) {
    io::write_file(path, j.dump() + "\n");
}

json svm_to_json(const SvmModel& m) {
    return json{{"support_vectors", m.support_vectors},
                {"coef", m.coef},
                {"rho", m.rho},
                {"gamma", m.gamma},
                {"one_class", m.one_class}};
}

SvmModel svm_from_json(const json& j) {
    SvmModel m;
    m.support_vectors =
        j.at("support_vectors").get<std::vector<std::vector<double>>>();
    m.coef = vec_from_json(j.at("coef"));
    m.rho = j.at("rho").get<double>();
    m.gamma = j.at("gamma").get<double>();
    m.one_class = j.at("one_class").get<bool>();
    if (m.coef.size() != m.support_vectors.size())
        throw IoError("model file: svm coefficient count mismatch");
    return m;
}

json gnb_to_json(const GnbModel& m) {
    return json{{"mean", {m.mean[0], m.mean[1]}},
                {"var", {m.var[0], m.var[1]}},
                {"log_prior", {m.log_prior[0], m.log_prior[1]}}};
}

GnbModel gnb_from_json(const json& j) {
    GnbModel m;
    for (int c = 0; c < 2; ++c) {
        m.mean[c] = vec_from_json(j.at("mean")[c]);
        m.var[c] = vec_from_json(j.at("var")[c]);
        m.log_prior[c] = j.at("log_prior")[c].get<double>();
    }
    return m;
}

json forest_to_json(const ForestModel& m) {
    json trees = json::array();
    for (const Tree& t : m.trees) {
        json nodes = json::array();
        for (const TreeNode& n : t.nodes)
            nodes.push_back(
                {n.feature, n.threshold, n.left, n.right, n.bot_fraction});
        trees.push_back(std::move(nodes));
    }
    return json{{"n_features", m.n_features}, {"trees", std::move(trees)}};
}

ForestModel forest_from_json(const json& j) {
    ForestModel m;
    m.n_features = j.at("n_features").get<std::size_t>();
    for (const json& jt : j.at("trees")) {
        Tree t;
        for (const json& jn : jt) {
            if (!jn.is_array() || jn.size() != 5)
                throw IoError("model file: malformed tree node");
            TreeNode n;
            n.feature = jn[0].get<int>();
            n.threshold = jn[1].get<double>();
            n.left = jn[2].get<int>();
            n.right = jn[3].get<int>();
            n.bot_fraction = jn[4].get<double>();
            t.nodes.push_back(n);
        }
        m.trees.push_back(std::move(t));
    }
    return m;
}

json lstm_to_json(const LstmDetModel& m) {
    return json{{"in_dim", m.cell.in_dim},   {"hidden", m.cell.hidden},
                {"Wx", mat_to_json(m.cell.Wx)}, {"Wh", mat_to_json(m.cell.Wh)},
                {"b", m.cell.b},             {"head_w", m.head_w},
                {"head_b", m.head_b},        {"timesteps", m.timesteps},
                {"step_dim", m.step_dim}};
}

LstmDetModel lstm_from_json(const json& j) {
    LstmDetModel m;
    m.cell.in_dim = j.at("in_dim").get<std::size_t>();
    m.cell.hidden = j.at("hidden").get<std::size_t>();
    m.cell.Wx = mat_from_json(j.at("Wx"));
    m.cell.Wh = mat_from_json(j.at("Wh"));
    m.cell.b = vec_from_json(j.at("b"));
    m.head_w = vec_from_json(j.at("head_w"));
    m.head_b = j.at("head_b").get<double>();
    m.timesteps = j.at("timesteps").get<std::size_t>();
    m.step_dim = j.at("step_dim").get<std::size_t>();
    return m;
}

json euclid_to_json(const EuclidModel& m) {
    return json{{"template_mean", m.template_mean},
                {"threshold", m.threshold},
                {"orientation", m.orientation}};
}

EuclidModel euclid_from_json(const json& j) {
    EuclidModel m;
    m.template_mean = vec_from_json(j.at("template_mean"));
    m.threshold = j.at("threshold").get<double>();
    m.orientation = j.at("orientation").get<double>();
    return m;
}

} // namespace

const char* generator_model_name(const GeneratorModel& m) {
    switch (m.index()) {
    case 0:
        return "universal";
    case 1:
        return "userdep";
    default:
        return "gnn";
    }
}

void save_generator(const GeneratorModel& m, const std::string& path) {
    json j = envelope("generator");
    if (const auto* u = std::get_if<UniversalModel>(&m)) {
        j["generator"] = {{"type", "universal"},
                          {"features", features_to_json(u->features)}};
    } else if (const auto* ud = std::get_if<UserDependentModel>(&m)) {
        json users = json::array();
        for (const UserModel& um : ud->users)
            users.push_back({{"user_id", um.user_id},
                             {"features", features_to_json(um.features)}});
        j["generator"] = {{"type", "userdep"}, {"users", std::move(users)}};
    } else {
        const GnnModel& g = std::get<GnnModel>(m);
        json nets = json::array();
        for (const GnnNet& net : g.nets)
            nets.push_back(gnn_net_to_json(net));
        json losses = json::array();
        for (const auto& curve : g.epoch_loss)
            losses.push_back(curve);
        j["generator"] = {
            {"type", "gnn"},
            {"family", g.family},
            {"conditioning",
             g.conditioning == Conditioning::first_key ? "first_key"
                                                       : "second_key"},
            {"sigma_floor", g.sigma_floor},
            {"nets", std::move(nets)},
            {"epoch_loss", std::move(losses)}};
    }
    write_model(path, j);
}

GeneratorModel load_generator(const std::string& path) {
    json j = parse_envelope(path, "generator");
    const json& g = j.at("generator");
    std::string type = g.at("type").get<std::string>();
    if (type == "universal") {
        UniversalModel m;
        m.features = features_from_json(g.at("features"));
        return m;
    }
    if (type == "userdep") {
        UserDependentModel m;
        for (const json& ju : g.at("users")) {
            UserModel um;
            um.user_id = ju.at("user_id").get<std::string>();
            um.features = features_from_json(ju.at("features"));
            m.users.push_back(std::move(um));
        }
        return m;
    }
    if (type == "gnn") {
        GnnModel m;
        m.family = g.at("family").get<std::string>();
        std::string cond = g.at("conditioning").get<std::string>();
        if (cond == "first_key")
            m.conditioning = Conditioning::first_key;
        else if (cond == "second_key")
            m.conditioning = Conditioning::second_key;
        else
            throw IoError("model file " + path + ": unknown conditioning");
        m.sigma_floor = g.at("sigma_floor").get<double>();
        const json& nets = g.at("nets");
        if (!nets.is_array() || nets.size() != 4)
            throw IoError("model file " + path + ": expected 4 networks");
        for (std::size_t k = 0; k < 4; ++k)
            m.nets[k] = gnn_net_from_json(nets[k]);
        const json& losses = g.at("epoch_loss");
        for (std::size_t k = 0; k < 4 && k < losses.size(); ++k)
            m.epoch_loss[k] = vec_from_json(losses[k]);
        return m;
    }
    throw IoError("model file " + path + ": unknown generator type '" + type +
                  "'");
}

void save_detector(const DetectorModel& m, const std::string& path) {
    json j = envelope("detector");
    json d{{"type", detector_name(m.kind)},
           {"max_keys", m.max_keys},
           {"use_keys", m.use_keys},
           {"dim", m.dim},
           {"scaler",
            {{"active", m.scaler.active},
             {"mean", m.scaler.mean},
             {"scale", m.scaler.scale}}}};
    switch (m.kind) {
    case DetectorKind::ocsvm:
    case DetectorKind::svm:
        d["svm"] = svm_to_json(std::get<SvmModel>(m.impl));
        d["fit_info"] = {{"iterations", m.svm_info.iterations},
                         {"kkt_gap", m.svm_info.kkt_gap},
                         {"n_support", m.svm_info.n_support}};
        break;
    case DetectorKind::gnb:
        d["gnb"] = gnb_to_json(std::get<GnbModel>(m.impl));
        break;
    case DetectorKind::rf:
        d["forest"] = forest_to_json(std::get<ForestModel>(m.impl));
        break;
    case DetectorKind::lstm:
        d["lstm"] = lstm_to_json(std::get<LstmDetModel>(m.impl));
        break;
    case DetectorKind::euclid:
        d["euclid"] = euclid_to_json(std::get<EuclidModel>(m.impl));
        break;
    }
    j["detector"] = std::move(d);
    write_model(path, j);
}

DetectorModel load_detector(const std::string& path) {
    json j = parse_envelope(path, "detector");
    const json& d = j.at("detector");
    DetectorModel m;
    m.kind = detector_from_name(d.at("type").get<std::string>());
    m.max_keys = d.at("max_keys").get<std::size_t>();
    m.use_keys = d.at("use_keys").get<bool>();
    m.dim = d.at("dim").get<std::size_t>();
    const json& sc = d.at("scaler");
    m.scaler.active = sc.at("active").get<bool>();
    m.scaler.mean = vec_from_json(sc.at("mean"));
    m.scaler.scale = vec_from_json(sc.at("scale"));
    switch (m.kind) {
    case DetectorKind::ocsvm:
    case DetectorKind::svm: {
        m.impl = svm_from_json(d.at("svm"));
        const json& fi = d.at("fit_info");
        m.svm_info.iterations = fi.at("iterations").get<std::size_t>();
        m.svm_info.kkt_gap = fi.at("kkt_gap").get<double>();
        m.svm_info.n_support = fi.at("n_support").get<std::size_t>();
        break;
    }
    case DetectorKind::gnb:
        m.impl = gnb_from_json(d.at("gnb"));
        break;
    case DetectorKind::rf:
        m.impl = forest_from_json(d.at("forest"));
        break;
    case DetectorKind::lstm:
        m.impl = lstm_from_json(d.at("lstm"));
        break;
    case DetectorKind::euclid:
        m.impl = euclid_from_json(d.at("euclid"));
        break;
    }
    return m;
}

} // namespace keysynth
