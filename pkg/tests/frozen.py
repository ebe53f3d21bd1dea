# Reference values produced by tests/oracles.py (mpmath tanh-sinh quadrature at
# 45 digits, six-point central differences with h = 1e-12, scipy DOP853 for the
# monodromy).  Regenerate with tests/make_frozen.py if the fixtures change.

FIXTURES = {
    ('kdv', 0.1, -0.1, 1.0): {
        'uminus': 0.4039171146736908, 'uplus': 1.5693523940195613,
        'T': 6.5777818682797795, 'M': 6.088590839552218, 'P': 6.746369026380195, 'H': -2.2772381620706987,
        'grad': [[-1.8041563094700048, 8.1039260700398, -0.49688185122548845], [-0.9937637024640035, -1.8041563094713555, 2.7018012674299285], [5.40360253487448, -0.9937637024747306, 8.740703921852589], [-2.78284052813781, 1.4876900891884555, -4.690220272791849]],
        'monodromy_mu': (0.3+0.2j),
        'monodromy': [[(2.3894789905261513+1.2217283464536979j), (0.9946376571637552+1.635968990977923j), (-1.2661499689730056+0.40671301627554063j)], [(1.1123416760314295+0.1425317425791052j), (2.1461683059766696+1.2998846666607407j), (1.516279119665052+0.9802195419316686j)], [(-0.0487588546929535-0.49930960427034454j), (0.6523229058559871+0.445593330826999j), (1.0529404532390274+0.7898454338186969j)]],
    },
    ('mkdv+', 0.0, -0.1, 1.0): {
        'uminus': -1.3321398835112939, 'uplus': -0.47476660661688985,
        'T': 5.236163250510283, 'M': -4.442882938158366, 'P': 4.243245661861809, 'H': -0.8817463853273109,
        'grad': [[3.382728550552786e-12, 8.953251506927106, -0.8274313238427191], [-1.6548626477510375, -2.99773904214569e-11, -3.902875911487475e-11], [4.330476865408521e-12, -1.6548626477059667, 1.790650301432422], [-2.1458714554680205e-12, 1.7227564745474058, -0.9780682830981866]],
        'monodromy_mu': (0.3+0.2j),
        'monodromy': [[(-5.0846073801009215-2.7397177236860286j), (0.17546802254157257+0.3450518402131023j), (-1.8766532528128907-0.8918911633407234j)], [(-32.819288594088114+7.030252081046458j), (3.0296472023751724+1.1166323763443142j), (-9.17987083072472+2.1447154460880844j)], [(14.306402912572924+7.44892277615423j), (-0.37406913936464387-0.8490336992955279j), (5.60227412326293+2.5635951642361414j)]],
    },
    ('mkdv+', 0.05, 0.2, 1.0): {
        'uminus': -1.491782701119432, 'uplus': 1.566433788272223,
        'T': 8.520693100452556, 'M': -0.027332181872242862, 'P': 7.524959101130804, 'H': -0.6861136434916302,
        'grad': [[0.3241565181437037, -10.027367914675171, -0.2737111232054124], [-0.5474222464397851, 0.32415651818014923, -0.08860593875338478], [-0.17721187762015086, -0.5474222464531916, 3.994739339997903], [0.051145747503323936, 2.2629768802526224, -1.9381971484201999]],
        'monodromy_mu': (0.3+0.2j),
        'monodromy': [[(14.277169694134288+6.737196430676874j), (-0.19624527514743556-0.5222351869073485j), (2.9976888773150687+1.4982531471635498j)], [(93.02267647751033-34.380540816444146j), (-2.738452449162938-1.7672583244734688j), (21.227711027596392-8.059774361341095j)], [(-47.93815784701055-30.55585857304843j), (0.514280597416584+1.9153221317820295j), (-9.777943594735522-6.828392780523529j)]],
    },
    ('mkdv-', 0.0, 0.1, -1.0): {
        'uminus': -0.47476660661688985, 'uplus': 0.47476660661688985,
        'T': 6.8987172720087315, 'M': 0.0, 'P': 0.7906955360378337, 'H': 0.36173983173993,
        'grad': [[0.0, 8.203297386519216, 5.09001811331191], [10.180036226622029, 0.0, 0.0], [0.0, 10.180036226616815, 1.6406594773044056], [0.0, 4.269688374656657, 0.31132792732143316]],
        'monodromy_mu': (0.3+0.2j),
        'monodromy': [[(2.664961224449223+2.407319135812403j), (1.766892906956523+2.823837093074022j), (-4.1604206863224835-0.19305433253073984j)], [(2.7337364136509215+1.3163632205134386j), (4.012063870610656+2.4698281996338696j), (-1.6142041450060347+1.8780596237373846j)], [(-0.09234141378060562-0.6700274265963077j), (0.6374130713988825-0.02432979715526657j), (1.071223945617513+1.1435044767541211j)]],
    },
    ('mkdv-', 0.1, 0.05, -1.0): {
        'uminus': -0.23391142734336495, 'uplus': 0.46528662013896427,
        'T': 6.756436139387439, 'M': 0.8383066400882178, 'P': 0.5204184077440482, 'H': 0.19934367028046537,
        'grad': [[4.739760943795062, 8.364371427164992, 4.925619354015991], [9.851238707937025, 4.739760943898067, 1.9516619005995348], [3.9033238011509908, 9.851238707985674, 1.3104132371076036], [0.7295499825930442, 4.033424688244509, 0.2137594607927959]],
        'monodromy_mu': (0.3+0.2j),
        'monodromy': [[(0.32095212570618104+1.297312018154765j), (1.2964833505128388+2.085246021127115j), (-3.792916910449505-0.44057163714310876j)], [(0.7097714201402674+1.2109026167259318j), (3.491285743855339+1.665566610969579j), (-1.131335730792268+1.9875784450840785j)], [(-0.04158539048769529-0.7237898340457605j), (-0.033913072767764646-0.8522112182936474j), (2.5599034374756653+1.2423079324935058j)]],
    },
}
