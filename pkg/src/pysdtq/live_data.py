import asyncio
import inspect
import logging
from abc import ABC, abstractmethod

import uvloop


log = logging.getLogger(__name__)

# Put on the queue by the producer after the last packet.
_END = object()


#
class LiveData(ABC):
    '''
    Produces a stream of data packets asynchronously, which are processed
    asynchronously in a 'consumer' function. The 'consumer' is injected
    at instantiation and could for example:

    - write snapshots of the packets to files
    - collect statistics of the packets
    - report progress

    The 'producer' is a subclass of LiveData. It implements the abstract
    method get_data(), which returns the next packet, or None when the
    stream is exhausted.

    Packets travel through a First-In-First-Out queue whose maximum size
    is set upon instantiation. After the last packet an end marker is
    queued, so the consumer always sees every packet that was produced.

    By default the uvloop implementation of the event loop is used. This
    can be disabled at instantiation.
    '''

    #
    def __init__(self,consumer_cb,id=None,rate=False,queue_maxsize=1,
                 use_uvloop=True,yields=True):
        '''
        This does not start producing yet. Use start() or run() for that.

        Parameters:

        consumer_cb : The consumer of the data packets, consumer(data). It may
                      be a plain function or a coroutine function.
        id : id of this data producer. If None, the name of the class will be used.
        rate : if True, log the number of packets per second.
        queue_maxsize : maximum size of the queue. Default = 1. Must be bounded
                        for blocking producers (see: https://bugs.python.org/issue43119).
        use_uvloop : if True start() runs on uvloop, otherwise on asyncio's
                     own event loop.
        yields : should be False if get_data() never yields, for example when
                 it is a CPU bound computation. The producer then yields
                 explicitly after every packet.
        '''
        self.__consumer_cb = consumer_cb
        self.__rate_interval = 1
        self.__updates = 0
        self.__rate = rate
        self.__queue_maxsize = queue_maxsize
        self._use_uvloop = use_uvloop
        self._yields = yields
        self.packets = 0
        self._id = id if id is not None else type(self).__name__


    #
    def start(self):
        '''
        Runs the stream to its end in a new event loop.
        '''
        if self._use_uvloop:
            uvloop.run(self.run())
        else:
            asyncio.run(self.run())


    @abstractmethod
    async def get_data(self):
        '''
        Produces the next packet, or None at the end of the stream. Must be
        overridden in subclasses. The format of the packet is up to the
        producer, as long as the consumer understands it.
        '''
        return None


    # produces packets until exhausted, then queues the end marker.
    async def _produce_data(self,queue):
        while True:
            data = await self.get_data()
            if data is None:
                break
            # ensure yield
            if not self._yields:
                await asyncio.sleep(0)
            await queue.put(data)
        await queue.put(_END)


    # dispatches the packets from the queue to the consumer.
    async def _consume_data(self,queue,timer):
        try:
            while True:
                data = await queue.get()
                queue.task_done()
                if data is _END:
                    break
                self.__updates += 1
                self.packets += 1
                if self.__consumer_cb is not None:
                    result = self.__consumer_cb(data)
                    if inspect.isawaitable(result):
                        await result
        finally:
            if timer is not None:
                timer.cancel()


    #
    async def _show_rate(self):
        if self.__updates > 0:
            log.info('%s: %d packets/s', self._id, self.__updates / self.__rate_interval)
            self.__updates = 0


    #
    async def _show_rate_timer(self):
        while True:
            # The interval is fixed by the sleep, not by the logging.
            await asyncio.gather(
                asyncio.sleep(self.__rate_interval),
                self._show_rate()
            )


    #
    async def run(self):
        '''
        Runs the stream to its end in the running event loop. An exception
        in the producer or the consumer cancels the other and propagates.
        '''
        queue = asyncio.Queue(maxsize=self.__queue_maxsize)
        try:
            async with asyncio.TaskGroup() as tg:
                timer = tg.create_task(self._show_rate_timer()) if self.__rate else None
                tg.create_task(self._produce_data(queue))
                tg.create_task(self._consume_data(queue, timer))
        except ExceptionGroup as eg:
            raise _first(eg) from None
        log.debug('%s: %d packets', self._id, self.packets)


#
def _first(eg):
    e = eg
    while isinstance(e, ExceptionGroup):
        e = e.exceptions[0]
    return e


#
async def _gather(streams):
    try:
        async with asyncio.TaskGroup() as tg:
            for s in streams:
                tg.create_task(s.run())
    except ExceptionGroup as eg:
        raise _first(eg) from None


#
def run_streams(streams,use_uvloop=True):
    '''
    Runs several LiveData streams concurrently in one event loop, each
    to its end. The packets of each stream reach its consumer in order.
    '''
    streams = list(streams)
    if use_uvloop:
        uvloop.run(_gather(streams))
    else:
        asyncio.run(_gather(streams))
