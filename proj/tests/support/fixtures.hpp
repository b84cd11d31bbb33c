#pragma once

// The five reference models used across the suite, as builder code and as
// canonical blueprint text. Expected values for them are derived by hand and
// cross-checked by the enumeration oracle.

#include <string>

#include "fmkit/core.hpp"

namespace support {

/// Root-only model "A".
inline fmkit::FeatureModel make_e0() {
    fmkit::FeatureModelBuilder b;
    fmkit::FeatureId a = b.add_feature("A");
    b.set_root(a);
    fmkit::FeatureModel fm = b.build("e0");
    fm.root = a;
    return fm;
}

/// Car with mandatory Engine, optional GPS, alternative {Gas, Electric}
/// under Engine, and GPS requires Electric. Exactly three configurations.
inline fmkit::FeatureModel make_e1() {
    fmkit::FeatureModelBuilder b;
    fmkit::FeatureId car = b.add_feature("Car");
    fmkit::FeatureId engine = b.add_feature("Engine");
    fmkit::FeatureId gps = b.add_feature("GPS");
    fmkit::FeatureId gas = b.add_feature("Gas");
    fmkit::FeatureId electric = b.add_feature("Electric");
    b.set_root(car);
    b.add_relationship(car, fmkit::RelKind::Mandatory, {engine});
    b.add_relationship(car, fmkit::RelKind::Optional, {gps});
    b.add_relationship(engine, fmkit::RelKind::Alternative, {gas, electric});
    b.add_constraint(fmkit::requires_constraint(gps, electric));
    fmkit::FeatureModel fm = b.build("e1");
    fm.root = car;
    return fm;
}

/// E1 with the Engine relationship loosened to optional; generalizes E1.
inline fmkit::FeatureModel make_e1_optional_engine() {
    fmkit::FeatureModel fm = make_e1();
    fm.relationships[0].kind = fmkit::RelKind::Optional;
    return fm;
}

/// Void model: two mandatory children that exclude each other.
inline fmkit::FeatureModel make_e2() {
    fmkit::FeatureModelBuilder b;
    fmkit::FeatureId a = b.add_feature("A");
    fmkit::FeatureId bb = b.add_feature("B");
    fmkit::FeatureId c = b.add_feature("C");
    b.set_root(a);
    b.add_relationship(a, fmkit::RelKind::Mandatory, {bb});
    b.add_relationship(a, fmkit::RelKind::Mandatory, {c});
    b.add_constraint(fmkit::excludes_constraint(bb, c));
    fmkit::FeatureModel fm = b.build("e2");
    fm.root = a;
    return fm;
}

/// False-optional fixture: optional B forced by "A requires B".
inline fmkit::FeatureModel make_e3() {
    fmkit::FeatureModelBuilder b;
    fmkit::FeatureId a = b.add_feature("A");
    fmkit::FeatureId bb = b.add_feature("B");
    b.set_root(a);
    b.add_relationship(a, fmkit::RelKind::Optional, {bb});
    b.add_constraint(fmkit::requires_constraint(a, bb));
    fmkit::FeatureModel fm = b.build("e3");
    fm.root = a;
    return fm;
}

/// Or-group fixture: {A,B}, {A,C}, {A,B,C}.
inline fmkit::FeatureModel make_e4() {
    fmkit::FeatureModelBuilder b;
    fmkit::FeatureId a = b.add_feature("A");
    fmkit::FeatureId bb = b.add_feature("B");
    fmkit::FeatureId c = b.add_feature("C");
    b.set_root(a);
    b.add_relationship(a, fmkit::RelKind::Or, {bb, c});
    fmkit::FeatureModel fm = b.build("e4");
    fm.root = a;
    return fm;
}

inline std::string e0_blueprint_text() { return "The root feature is A.\n"; }

inline std::string e1_blueprint_text() {
    return "The root feature is Car.\n"
           "Feature Car must have Feature Engine.\n"
           "Feature Car can have Feature GPS.\n"
           "Feature Engine can be Feature Gas or Feature Electric.\n"
           "Feature GPS requires Feature Electric.\n";
}

inline std::string e1_optional_engine_blueprint_text() {
    return "The root feature is Car.\n"
           "Feature Car can have Feature Engine.\n"
           "Feature Car can have Feature GPS.\n"
           "Feature Engine can be Feature Gas or Feature Electric.\n"
           "Feature GPS requires Feature Electric.\n";
}

inline std::string e2_blueprint_text() {
    return "The root feature is A.\n"
           "Feature A must have Feature B.\n"
           "Feature A must have Feature C.\n"
           "Feature B excludes Feature C.\n";
}

inline std::string e3_blueprint_text() {
    return "The root feature is A.\n"
           "Feature A can have Feature B.\n"
           "Feature A requires Feature B.\n";
}

inline std::string e4_blueprint_text() {
    return "The root feature is A.\n"
           "Feature A can be Feature B, Feature C, or both.\n";
}

inline std::string e1_uvl_text() {
    return "features\n"
           "\tCar\n"
           "\t\tmandatory\n"
           "\t\t\tEngine\n"
           "\t\t\t\talternative\n"
           "\t\t\t\t\tGas\n"
           "\t\t\t\t\tElectric\n"
           "\t\toptional\n"
           "\t\t\tGPS\n"
           "\n"
           "constraints\n"
           "\tGPS => Electric\n";
}

} // namespace support
