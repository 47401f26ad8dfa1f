#![allow(clippy::excessive_precision)]

//! Nested Gauss-Patterson rules for the uniform probability density on [-1, 1].
//!
//! Nodes ascending; weights sum to one. Sizes 1, 3, 7, 15, 31, 63. Each rule contains
//! the nodes of the previous one.

const NODES_1: [f64; 1] = [
    0.0,
];
const WEIGHTS_1: [f64; 1] = [
    1.0,
];
const NODES_3: [f64; 3] = [
    -0.7745966692414833770359,
    0.0,
    0.7745966692414833770359,
];
const WEIGHTS_3: [f64; 3] = [
    0.2777777777777777777778,
    0.4444444444444444444444,
    0.2777777777777777777778,
];
const NODES_7: [f64; 7] = [
    -0.9604912687080202834235,
    -0.7745966692414833770359,
    -0.4342437493468025580021,
    0.0,
    0.4342437493468025580021,
    0.7745966692414833770359,
    0.9604912687080202834235,
];
const WEIGHTS_7: [f64; 7] = [
    0.05232811301323363259691,
    0.1342440449341667203643,
    0.2006987073879811114525,
    0.2254582693292370711726,
    0.2006987073879811114525,
    0.1342440449341667203643,
    0.05232811301323363259691,
];
const NODES_15: [f64; 15] = [
    -0.9938319632127550222085,
    -0.9604912687080202834235,
    -0.8884592328722569988904,
    -0.7745966692414833770359,
    -0.6211029467372264029407,
    -0.4342437493468025580021,
    -0.2233866864289668816282,
    0.0,
    0.2233866864289668816282,
    0.4342437493468025580021,
    0.6211029467372264029407,
    0.7745966692414833770359,
    0.8884592328722569988904,
    0.9604912687080202834235,
    0.9938319632127550222085,
];
const WEIGHTS_15: [f64; 15] = [
    0.008500859814970130169514,
    0.02580164149853986984846,
    0.04646359765756226884295,
    0.06720762762189211017998,
    0.08575595456819569039368,
    0.100314264688494510517,
    0.1095784292007937482018,
    0.1127552498991033436932,
    0.1095784292007937482018,
    0.100314264688494510517,
    0.08575595456819569039368,
    0.06720762762189211017998,
    0.04646359765756226884295,
    0.02580164149853986984846,
    0.008500859814970130169514,
];
const NODES_31: [f64; 31] = [
    -0.9990981249676675976622,
    -0.9938319632127550222085,
    -0.9815311495537401068674,
    -0.9604912687080202834235,
    -0.9296548574297400566701,
    -0.8884592328722569988904,
    -0.8367259381688687355028,
    -0.7745966692414833770359,
    -0.7024962064915270786098,
    -0.6211029467372264029407,
    -0.5313197436443756239721,
    -0.4342437493468025580021,
    -0.3311353932579768330926,
    -0.2233866864289668816282,
    -0.1124889431331866257458,
    0.0,
    0.1124889431331866257458,
    0.2233866864289668816282,
    0.3311353932579768330926,
    0.4342437493468025580021,
    0.5313197436443756239721,
    0.6211029467372264029407,
    0.7024962064915270786098,
    0.7745966692414833770359,
    0.8367259381688687355028,
    0.8884592328722569988904,
    0.9296548574297400566701,
    0.9604912687080202834235,
    0.9815311495537401068674,
    0.9938319632127550222085,
    0.9990981249676675976622,
];
const WEIGHTS_31: [f64; 31] = [
    0.001272390395780937207701,
    0.004217282869660553123157,
    0.008223024927193905466894,
    0.01290379904808832678232,
    0.01797855165356466104839,
    0.0232314466308789932707,
    0.0284897547470616787061,
    0.0336038771479953517702,
    0.03843981024950176552135,
    0.04287796002499517557709,
    0.04681355499063223680833,
    0.05015713930589778938565,
    0.05283494679011740487191,
    0.05478921052796231911834,
    0.05597843651047672844007,
    0.05637762836038434580357,
    0.05597843651047672844007,
    0.05478921052796231911834,
    0.05283494679011740487191,
    0.05015713930589778938565,
    0.04681355499063223680833,
    0.04287796002499517557709,
    0.03843981024950176552135,
    0.0336038771479953517702,
    0.0284897547470616787061,
    0.0232314466308789932707,
    0.01797855165356466104839,
    0.01290379904808832678232,
    0.008223024927193905466894,
    0.004217282869660553123157,
    0.001272390395780937207701,
];
const NODES_63: [f64; 63] = [
    -0.999872888120357611938,
    -0.9990981249676675976622,
    -0.9972062593722219590765,
    -0.9938319632127550222085,
    -0.9886847575474294799385,
    -0.9815311495537401068674,
    -0.9721828747485817965781,
    -0.9604912687080202834235,
    -0.9463428583734029051485,
    -0.9296548574297400566701,
    -0.9103711569570042924978,
    -0.8884592328722569988904,
    -0.8639079381936904771464,
    -0.8367259381688687355028,
    -0.8069405319502176118563,
    -0.7745966692414833770359,
    -0.7397560443526947586772,
    -0.7024962064915270786098,
    -0.662909660024780595461,
    -0.6211029467372264029407,
    -0.5771957100520458148437,
    -0.5313197436443756239721,
    -0.4836180269458410275622,
    -0.4342437493468025580021,
    -0.3833593241987303469165,
    -0.3311353932579768330926,
    -0.2777498220218243150654,
    -0.2233866864289668816282,
    -0.1682352515522074649823,
    -0.1124889431331866257458,
    -0.05634431304659278997197,
    0.0,
    0.05634431304659278997197,
    0.1124889431331866257458,
    0.1682352515522074649823,
    0.2233866864289668816282,
    0.2777498220218243150654,
    0.3311353932579768330926,
    0.3833593241987303469165,
    0.4342437493468025580021,
    0.4836180269458410275622,
    0.5313197436443756239721,
    0.5771957100520458148437,
    0.6211029467372264029407,
    0.662909660024780595461,
    0.7024962064915270786098,
    0.7397560443526947586772,
    0.7745966692414833770359,
    0.8069405319502176118563,
    0.8367259381688687355028,
    0.8639079381936904771464,
    0.8884592328722569988904,
    0.9103711569570042924978,
    0.9296548574297400566701,
    0.9463428583734029051485,
    0.9604912687080202834235,
    0.9721828747485817965781,
    0.9815311495537401068674,
    0.9886847575474294799385,
    0.9938319632127550222085,
    0.9972062593722219590765,
    0.9990981249676675976622,
    0.999872888120357611938,
];
const WEIGHTS_63: [f64; 63] = [
    0.0001816107409227653298468,
    0.0006325782781150340056863,
    0.001289524897342844136214,
    0.002108815220779427419542,
    0.003057753411058623169839,
    0.004111503978617964834629,
    0.005249123454810660949136,
    0.006451900050175632812988,
    0.007703375233279748901065,
    0.008989275784064135166448,
    0.01029711695795635557459,
    0.01161572331995513472163,
    0.01293483966360737345538,
    0.01424487737291677430625,
    0.01553677555584398243994,
    0.01680193857410386527087,
    0.01803221639039128632005,
    0.01921990512472776601932,
    0.02035775505847215946695,
    0.02143898001250386724646,
    0.02245726582681609870713,
    0.02340677749531400620132,
    0.02428216520333659935797,
    0.02507856965294976870684,
    0.0257916269760242293884,
    0.02641747339505825993104,
    0.02695274966763303196344,
    0.02739460526398143251611,
    0.02774070217827968199392,
    0.02798921825523815970378,
    0.0281388499156271506363,
    0.02818881418019235869383,
    0.0281388499156271506363,
    0.02798921825523815970378,
    0.02774070217827968199392,
    0.02739460526398143251611,
    0.02695274966763303196344,
    0.02641747339505825993104,
    0.0257916269760242293884,
    0.02507856965294976870684,
    0.02428216520333659935797,
    0.02340677749531400620132,
    0.02245726582681609870713,
    0.02143898001250386724646,
    0.02035775505847215946695,
    0.01921990512472776601932,
    0.01803221639039128632005,
    0.01680193857410386527087,
    0.01553677555584398243994,
    0.01424487737291677430625,
    0.01293483966360737345538,
    0.01161572331995513472163,
    0.01029711695795635557459,
    0.008989275784064135166448,
    0.007703375233279748901065,
    0.006451900050175632812988,
    0.005249123454810660949136,
    0.004111503978617964834629,
    0.003057753411058623169839,
    0.002108815220779427419542,
    0.001289524897342844136214,
    0.0006325782781150340056863,
    0.0001816107409227653298468,
];

pub(crate) const RULES: [(&[f64], &[f64]); 6] = [
    (&NODES_1, &WEIGHTS_1),
    (&NODES_3, &WEIGHTS_3),
    (&NODES_7, &WEIGHTS_7),
    (&NODES_15, &WEIGHTS_15),
    (&NODES_31, &WEIGHTS_31),
    (&NODES_63, &WEIGHTS_63),
];
