// Generated by tools/gen_tw1_table.py. Do not edit.
// Tracy-Widom (beta = 1) quantiles at q = 0.001, 0.002, ..., 0.999.

#include "nbgof/stats.hpp"

namespace nbgof::detail {

const std::array<double, 999> kTw1Quantiles = {
    -4.654198244422, -4.447683582946, -4.319189226620, -4.224097164946,
    -4.147876502091, -4.083880611238, -4.028489197878, -3.979503340513,
    -3.935483234785, -3.895432673064, -3.858632593918, -3.824546293361,
    -3.792762123503, -3.762957148623, -3.734873164476, -3.708300342418,
    -3.683065755224, -3.659025129857, -3.636056793029, -3.614057143231,
    -3.592937208191, -3.572619988868, -3.553038383083, -3.534133542872,
    -3.515853560840, -3.498152409244, -3.480989075414, -3.464326851327,
    -3.448132745374, -3.432376991846, -3.417032639228, -3.402075202510,
    -3.387482367906, -3.373233740726, -3.359310629036, -3.345695857149,
    -3.332373604122, -3.319329263333, -3.306549319900, -3.294021243285,
    -3.281733392872, -3.269674934665, -3.257835767577, -3.246206458004,
    -3.234778181586, -3.223542671222, -3.212492170557, -3.201619392249,
    -3.190917480441, -3.180379976938, -3.170000790660, -3.159774169990,
    -3.149694677689, -3.139757168114, -3.129956766465, -3.120288849865,
    -3.110749030074, -3.101333137669, -3.092037207548, -3.082857465618,
    -3.073790316559, -3.064832332563, -3.055980242949, -3.047230924575,
    -3.038581392975, -3.030028794162, -3.021570397027, -3.013203586285,
    -3.004925855935, -2.996734803162, -2.988628122678, -2.980603601434,
    -2.972659113701, -2.964792616468, -2.957002145143, -2.949285809536,
    -2.941641790094, -2.934068334372, -2.926563753727, -2.919126420213,
    -2.911754763663, -2.904447268944, -2.897202473381, -2.890018964323,
    -2.882895376855, -2.875830391637, -2.868822732868, -2.861871166360,
    -2.854974497723, -2.848131570640, -2.841341265245, -2.834602496580,
    -2.827914213138, -2.821275395479, -2.814685054916, -2.808142232274,
    -2.801645996707, -2.795195444571, -2.788789698361, -2.782427905695,
    -2.776109238347, -2.769832891325, -2.763598082000, -2.757404049268,
    -2.751250052753, -2.745135372052, -2.739059306004, -2.733021172007,
    -2.727020305348, -2.721056058577, -2.715127800905, -2.709234917622,
    -2.703376809548, -2.697552892503, -2.691762596803, -2.686005366772,
    -2.680280660281, -2.674587948300, -2.668926714472, -2.663296454705,
    -2.657696676776, -2.652126899956, -2.646586654645, -2.641075482027,
    -2.635592933735, -2.630138571528, -2.624711966982, -2.619312701194,
    -2.613940364493, -2.608594556170, -2.603274884208, -2.597980965028,
    -2.592712423244, -2.587468891424, -2.582250009865, -2.577055426371,
    -2.571884796038, -2.566737781054, -2.561614050497, -2.556513280148,
    -2.551435152304, -2.546379355601, -2.541345584842, -2.536333540832,
    -2.531342930218, -2.526373465330, -2.521424864037, -2.516496849597,
    -2.511589150520, -2.506701500431, -2.501833637940, -2.496985306511,
    -2.492156254345, -2.487346234256, -2.482555003559, -2.477782323953,
    -2.473027961421, -2.468291686118, -2.463573272271, -2.458872498083,
    -2.454189145632, -2.449523000786, -2.444873853105, -2.440241495757,
    -2.435625725437, -2.431026342278, -2.426443149774, -2.421875954705,
    -2.417324567058, -2.412788799955, -2.408268469583, -2.403763395122,
    -2.399273398683, -2.394798305238, -2.390337942557, -2.385892141149,
    -2.381460734201, -2.377043557519, -2.372640449470, -2.368251250929,
    -2.363875805226, -2.359513958090, -2.355165557600, -2.350830454138,
    -2.346508500337, -2.342199551035, -2.337903463231, -2.333620096037,
    -2.329349310639, -2.325090970249, -2.320844940071, -2.316611087253,
    -2.312389280854, -2.308179391802, -2.303981292859, -2.299794858583,
    -2.295619965293, -2.291456491035, -2.287304315549, -2.283163320233,
    -2.279033388115, -2.274914403818, -2.270806253530, -2.266708824979,
    -2.262622007395, -2.258545691490, -2.254479769425, -2.250424134785,
    -2.246378682552, -2.242343309078, -2.238317912062, -2.234302390524,
    -2.230296644779, -2.226300576416, -2.222314088276, -2.218337084424,
    -2.214369470134, -2.210411151860, -2.206462037222, -2.202522034981,
    -2.198591055018, -2.194669008319, -2.190755806950, -2.186851364045,
    -2.182955593778, -2.179068411355, -2.175189732989, -2.171319475885,
    -2.167457558226, -2.163603899150, -2.159758418741, -2.155921038007,
    -2.152091678867, -2.148270264137, -2.144456717513, -2.140650963557,
    -2.136852927682, -2.133062536139, -2.129279716003, -2.125504395160,
    -2.121736502292, -2.117975966865, -2.114222719116, -2.110476690044,
    -2.106737811391, -2.103006015635, -2.099281235978, -2.095563406332,
    -2.091852461310, -2.088148336215, -2.084450967027, -2.080760290394,
    -2.077076243621, -2.073398764660, -2.069727792100, -2.066063265158,
    -2.062405123666, -2.058753308067, -2.055107759398, -2.051468419291,
    -2.047835229954, -2.044208134167, -2.040587075276, -2.036971997177,
    -2.033362844317, -2.029759561675, -2.026162094765, -2.022570389620,
    -2.018984392788, -2.015404051324, -2.011829312780, -2.008260125202,
    -2.004696437119, -2.001138197538, -1.997585355936, -1.994037862253,
    -1.990495666886, -1.986958720682, -1.983426974933, -1.979900381366,
    -1.976378892139, -1.972862459837, -1.969351037461, -1.965844578426,
    -1.962343036553, -1.958846366065, -1.955354521578, -1.951867458101,
    -1.948385131024, -1.944907496117, -1.941434509524, -1.937966127757,
    -1.934502307689, -1.931043006554, -1.927588181936, -1.924137791770,
    -1.920691794332, -1.917250148236, -1.913812812433, -1.910379746199,
    -1.906950909138, -1.903526261173, -1.900105762541, -1.896689373793,
    -1.893277055785, -1.889868769679, -1.886464476932, -1.883064139299,
    -1.879667718823, -1.876275177837, -1.872886478953, -1.869501585066,
    -1.866120459344, -1.862743065226, -1.859369366421, -1.855999326901,
    -1.852632910900, -1.849270082906, -1.845910807666, -1.842555050172,
    -1.839202775667, -1.835853949636, -1.832508537804, -1.829166506135,
    -1.825827820826, -1.822492448304, -1.819160355226, -1.815831508472,
    -1.812505875145, -1.809183422566, -1.805864118273, -1.802547930017,
    -1.799234825758, -1.795924773664, -1.792617742109, -1.789313699667,
    -1.786012615114, -1.782714457419, -1.779419195748, -1.776126799457,
    -1.772837238092, -1.769550481384, -1.766266499249, -1.762985261785,
    -1.759706739268, -1.756430902150, -1.753157721059, -1.749887166794,
    -1.746619210323, -1.743353822784, -1.740090975478, -1.736830639870,
    -1.733572787583, -1.730317390404, -1.727064420271, -1.723813849281,
    -1.720565649679, -1.717319793864, -1.714076254381, -1.710835003922,
    -1.707596015324, -1.704359261564, -1.701124715761, -1.697892351173,
    -1.694662141193, -1.691434059351, -1.688208079306, -1.684984174852,
    -1.681762319910, -1.678542488528, -1.675324654882, -1.672108793270,
    -1.668894878112, -1.665682883949, -1.662472785442, -1.659264557366,
    -1.656058174615, -1.652853612195, -1.649650845223, -1.646449848929,
    -1.643250598651, -1.640053069834, -1.636857238029, -1.633663078893,
    -1.630470568182, -1.627279681757, -1.624090395577, -1.620902685700,
    -1.617716528282, -1.614531899571, -1.611348775912, -1.608167133741,
    -1.604986949588, -1.601808200068, -1.598630861889, -1.595454911843,
    -1.592280326808, -1.589107083749, -1.585935159711, -1.582764531821,
    -1.579595177288, -1.576427073399, -1.573260197518, -1.570094527088,
    -1.566930039625, -1.563766712719, -1.560604524035, -1.557443451307,
    -1.554283472339, -1.551124565008, -1.547966707255, -1.544809877088,
    -1.541654052583, -1.538499211879, -1.535345333176, -1.532192394740,
    -1.529040374896, -1.525889252027, -1.522739004578, -1.519589611048,
    -1.516441049996, -1.513293300033, -1.510146339826, -1.507000148095,
    -1.503854703611, -1.500709985197, -1.497565971726, -1.494422642117,
    -1.491279975341, -1.488137950413, -1.484996546394, -1.481855742389,
    -1.478715517549, -1.475575851065, -1.472436722170, -1.469298110139,
    -1.466159994284, -1.463022353958, -1.459885168551, -1.456748417487,
    -1.453612080229, -1.450476136273, -1.447340565147, -1.444205346415,
    -1.441070459670, -1.437935884536, -1.434801600668, -1.431667587749,
    -1.428533825488, -1.425400293625, -1.422266971922, -1.419133840167,
    -1.416000878174, -1.412868065778, -1.409735382836, -1.406602809228,
    -1.403470324853, -1.400337909629, -1.397205543495, -1.394073206404,
    -1.390940878329, -1.387808539256, -1.384676169189, -1.381543748142,
    -1.378411256146, -1.375278673241, -1.372145979480, -1.369013154926,
    -1.365880179652, -1.362747033739, -1.359613697275, -1.356480150355,
    -1.353346373082, -1.350212345563, -1.347078047906, -1.343943460227,
    -1.340808562642, -1.337673335269, -1.334537758226, -1.331401811632,
    -1.328265475603, -1.325128730255, -1.321991555700, -1.318853932047,
    -1.315715839399, -1.312577257854, -1.309438167506, -1.306298548438,
    -1.303158380726, -1.300017644440, -1.296876319635, -1.293734386360,
    -1.290591824649, -1.287448614525, -1.284304735997, -1.281160169061,
    -1.278014893696, -1.274868889866, -1.271722137518, -1.268574616581,
    -1.265426306965, -1.262277188561, -1.259127241240, -1.255976444849,
    -1.252824779216, -1.249672224144, -1.246518759413, -1.243364364776,
    -1.240209019962, -1.237052704674, -1.233895398585, -1.230737081340,
    -1.227577732555, -1.224417331817, -1.221255858679, -1.218093292664,
    -1.214929613259, -1.211764799920, -1.208598832067, -1.205431689083,
    -1.202263350316, -1.199093795073, -1.195923002625, -1.192750952204,
    -1.189577622998, -1.186402994155, -1.183227044782, -1.180049753940,
    -1.176871100647, -1.173691063875, -1.170509622549, -1.167326755547,
    -1.164142441700, -1.160956659786, -1.157769388536, -1.154580606629,
    -1.151390292689, -1.148198425290, -1.145004982949, -1.141809944129,
    -1.138613287235, -1.135414990616, -1.132215032562, -1.129013391302,
    -1.125810045006, -1.122604971782, -1.119398149674, -1.116189556662,
    -1.112979170664, -1.109766969528, -1.106552931037, -1.103337032905,
    -1.100119252776, -1.096899568226, -1.093677956757, -1.090454395798,
    -1.087228862706, -1.084001334762, -1.080771789169, -1.077540203056,
    -1.074306553470, -1.071070817381, -1.067832971677, -1.064592993163,
    -1.061350858561, -1.058106544510, -1.054860027561, -1.051611284180,
    -1.048360290742, -1.045107023534, -1.041851458753, -1.038593572502,
    -1.035333340792, -1.032070739538, -1.028805744560, -1.025538331581,
    -1.022268476223, -1.018996154011, -1.015721340366, -1.012444010606,
    -1.009164139948, -1.005881703500, -1.002596676264, -0.999309033135,
    -0.996018748895, -0.992725798218, -0.989430155663, -0.986131795676,
    -0.982830692585, -0.979526820604, -0.976220153826, -0.972910666223,
    -0.969598331647, -0.966283123826, -0.962965016361, -0.959643982729,
    -0.956319996277, -0.952993030222, -0.949663057652, -0.946330051517,
    -0.942993984637, -0.939654829691, -0.936312559223, -0.932967145636,
    -0.929618561189, -0.926266778001, -0.922911768042, -0.919553503137,
    -0.916191954961, -0.912827095039, -0.909458894742, -0.906087325286,
    -0.902712357732, -0.899333962981, -0.895952111774, -0.892566774689,
    -0.889177922141, -0.885785524377, -0.882389551475, -0.878989973344,
    -0.875586759718, -0.872179880158, -0.868769304048, -0.865355000590,
    -0.861936938809, -0.858515087542, -0.855089415443, -0.851659890977,
    -0.848226482418, -0.844789157847, -0.841347885151, -0.837902632018,
    -0.834453365938, -0.831000054195, -0.827542663873, -0.824081161844,
    -0.820615514773, -0.817145689110, -0.813671651092, -0.810193366737,
    -0.806710801843, -0.803223921984, -0.799732692509, -0.796237078537,
    -0.792737044958, -0.789232556425, -0.785723577355, -0.782210071924,
    -0.778692004065, -0.775169337465, -0.771642035563, -0.768110061544,
    -0.764573378337, -0.761031948615, -0.757485734787, -0.753934698997,
    -0.750378803122, -0.746818008767, -0.743252277260, -0.739681569652,
    -0.736105846713, -0.732525068925, -0.728939196483, -0.725348189288,
    -0.721752006946, -0.718150608759, -0.714543953731, -0.710932000552,
    -0.707314707605, -0.703692032956, -0.700063934349, -0.696430369208,
    -0.692791294626, -0.689146667366, -0.685496443853, -0.681840580174,
    -0.678179032069, -0.674511754928, -0.670838703789, -0.667159833330,
    -0.663475097867, -0.659784451347, -0.656087847347, -0.652385239063,
    -0.648676579311, -0.644961820518, -0.641240914721, -0.637513813558,
    -0.633780468263, -0.630040829663, -0.626294848173, -0.622542473786,
    -0.618783656073, -0.615018344173, -0.611246486791, -0.607468032188,
    -0.603682928179, -0.599891122124, -0.596092560925, -0.592287191016,
    -0.588474958360, -0.584655808440, -0.580829686255, -0.576996536311,
    -0.573156302617, -0.569308928675, -0.565454357475, -0.561592531488,
    -0.557723392658, -0.553846882394, -0.549962941566, -0.546071510493,
    -0.542172528938, -0.538265936100, -0.534351670605, -0.530429670499,
    -0.526499873239, -0.522562215685, -0.518616634092, -0.514663064100,
    -0.510701440727, -0.506731698358, -0.502753770739, -0.498767590963,
    -0.494773091465, -0.490770204011, -0.486758859687, -0.482738988889,
    -0.478710521318, -0.474673385960, -0.470627511085, -0.466572824232,
    -0.462509252197, -0.458436721024, -0.454355155994, -0.450264481613,
    -0.446164621599, -0.442055498870, -0.437937035536, -0.433809152882,
    -0.429671771357, -0.425524810561, -0.421368189233, -0.417201825236,
    -0.413025635545, -0.408839536232, -0.404643442453, -0.400437268432,
    -0.396220927448, -0.391994331818, -0.387757392886, -0.383510021003,
    -0.379252125511, -0.374983614732, -0.370704395946, -0.366414375378,
    -0.362113458177, -0.357801548403, -0.353478549005, -0.349144361808,
    -0.344798887487, -0.340442025555, -0.336073674340, -0.331693730967,
    -0.327302091335, -0.322898650102, -0.318483300658, -0.314055935105,
    -0.309616444238, -0.305164717522, -0.300700643064, -0.296224107599,
    -0.291734996455, -0.287233193538, -0.282718581305, -0.278191040733,
    -0.273650451300, -0.269096690956, -0.264529636093, -0.259949161524,
    -0.255355140447, -0.250747444421, -0.246125943335, -0.241490505377,
    -0.236840997004, -0.232177282911, -0.227499225996, -0.222806687328,
    -0.218099526116, -0.213377599669, -0.208640763365, -0.203888870612,
    -0.199121772812, -0.194339319321, -0.189541357414, -0.184727732239,
    -0.179898286784, -0.175052861827, -0.170191295899, -0.165313425235,
    -0.160419083734, -0.155508102911, -0.150580311846, -0.145635537143,
    -0.140673602872, -0.135694330524, -0.130697538956, -0.125683044339,
    -0.120650660102, -0.115600196875, -0.110531462432, -0.105444261632,
    -0.100338396358, -0.095213665454, -0.090069864660, -0.084906786549,
    -0.079724220456, -0.074521952412, -0.069299765069, -0.064057437628,
    -0.058794745767, -0.053511461559, -0.048207353396, -0.042882185904,
    -0.037535719862, -0.032167712116, -0.026777915485, -0.021366078679,
    -0.015931946195, -0.010475258227, -0.004995750566, 0.000506845506,
    0.006032803317, 0.011582400916, 0.017155921182, 0.022753651945,
    0.028375886094, 0.034022921711, 0.039695062186, 0.045392616354,
    0.051115898624, 0.056865229119, 0.062640933817, 0.068443344699,
    0.074272799895, 0.080129643846, 0.086014227462, 0.091926908286,
    0.097868050670, 0.103838025947, 0.109837212617, 0.115865996534,
    0.121924771101, 0.128013937475, 0.134133904769, 0.140285090274,
    0.146467919677, 0.152682827294, 0.158930256309, 0.165210659019,
    0.171524497088, 0.177872241819, 0.184254374418, 0.190671386285,
    0.197123779307, 0.203612066161, 0.210136770630, 0.216698427935,
    0.223297585070, 0.229934801157, 0.236610647815, 0.243325709535,
    0.250080584080, 0.256875882892, 0.263712231520, 0.270590270064,
    0.277510653632, 0.284474052824, 0.291481154229, 0.298532660944,
    0.305629293112, 0.312771788491, 0.319960903033, 0.327197411500,
    0.334482108101, 0.341815807152, 0.349199343775, 0.356633574619,
    0.364119378613, 0.371657657760, 0.379249337957, 0.386895369858,
    0.394596729777, 0.402354420630, 0.410169472918, 0.418042945766,
    0.425975928002, 0.433969539290, 0.442024931320, 0.450143289058,
    0.458325832051, 0.466573815802, 0.474888533213, 0.483271316106,
    0.491723536811, 0.500246609850, 0.508841993701, 0.517511192658,
    0.526255758790, 0.535077294012, 0.543977452260, 0.552957941795,
    0.562020527635, 0.571167034121, 0.580399347634, 0.589719419474,
    0.599129268899, 0.608630986351, 0.618226736882, 0.627918763777,
    0.637709392410, 0.647601034341, 0.657596191671, 0.667697461674,
    0.677907541740, 0.688229234634, 0.698665454114, 0.709219230931,
    0.719893719231, 0.730692203422, 0.741618105508, 0.752674992964,
    0.763866587180, 0.775196772528, 0.786669606114, 0.798289328269,
    0.810060373861, 0.821987384490, 0.834075221665, 0.846328981047,
    0.858754007875, 0.871355913692, 0.884140594495, 0.897114250474,
    0.910283407499, 0.923654940547, 0.937236099288, 0.951034536070,
    0.965058336574, 0.979316053470, 0.993816743406, 1.008570007769,
    1.023586037659, 1.038875663633, 1.054450410832, 1.070322560213,
    1.086505216708, 1.103012385292, 1.119859056070, 1.137061299725,
    1.154636374864, 1.172602849107, 1.190980736079, 1.209791650904,
    1.229058987281, 1.248808119854, 1.269066636353, 1.289864604947,
    1.311234883425, 1.333213478349, 1.355839964232, 1.379157975224,
    1.403215784953, 1.428066994262, 1.453771351949, 1.480395740719,
    1.508015370072, 1.536715230724, 1.566591882753, 1.597755674125,
    1.630333520646, 1.664472427528, 1.700344004298, 1.738150330633,
    1.778131691016, 1.820576944140, 1.865837687358, 1.914348021697,
    1.966652815009, 2.023449281380, 2.085650227410, 2.154484165870,
    2.231661649118, 2.319668772316, 2.422326585896, 2.545972709811,
    2.702346657255, 2.917407271897, 3.272196059002,
};

}  // namespace nbgof::detail
