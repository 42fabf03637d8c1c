from dataclasses import dataclass

from .live_data import LiveData
from .reinit import Reinitializer, ErrorReport
from .grid import ScalarField


#
@dataclass(frozen=True, eq=False)
class ReinitPacket:
    '''
    One pseudo-time step of a reinitialization run.

    Attributes:

    iteration : steps taken so far, 0 for the input field.
    phi : the field after that many steps.
    report : the ErrorReport of phi, or None on iterations that are not logged.
    '''
    iteration: int
    phi: ScalarField
    report: ErrorReport = None


#
class LiveReinit(LiveData):
    '''
    Produces the fields of a reinitialization run as a stream, one
    ReinitPacket per TVD-RK3 step, starting with the input field at
    iteration 0. The 'consumer' function can for example write snapshots,
    or collect the convergence log from the packets' reports.
    '''


    #
    def __init__(self,reinitializer,consumer_cb,id=None,rate=False,queue_maxsize=1,
                 use_uvloop=True):
        '''
        Parameters:

        reinitializer : Reinitializer, not yet stepped.
        consumer_cb : The consumer of the ReinitPackets.
        id : id of this data producer. If None, the name of the class will be used.
        rate : if True, log the steps per second.
        queue_maxsize : Determines the maximum size of the queue. Default = 1.
        use_uvloop : if True, start() runs on uvloop.
        '''
        # the steps are CPU bound and never yield.
        super().__init__(consumer_cb=consumer_cb,id=id,rate=rate,queue_maxsize=queue_maxsize,
                         use_uvloop=use_uvloop,yields=False)
        if not isinstance(reinitializer, Reinitializer):
            raise TypeError(f'expected a Reinitializer, got {type(reinitializer).__name__}')
        self.reinitializer = reinitializer
        self._started = False


    #
    @property
    def reports(self):
        return self.reinitializer.reports


    #
    async def get_data(self):
        '''
        Takes the next step. Returns None after the last iteration.
        '''
        r = self.reinitializer
        if not self._started:
            self._started = True
            return ReinitPacket(r.iteration, r.phi, r.record())
        if r.iteration >= r.params.iterations:
            return None
        phi = r.step()
        report = r.record() if r.due() else None
        return ReinitPacket(r.iteration, phi, report)
